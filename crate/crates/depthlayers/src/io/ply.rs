//! ASCII PLY point-cloud export.
//!
//! Pixels are back-projected with a fixed pinhole model (60 degree vertical
//! field of view, principal point at the image center). Inverse depth `d`
//! maps to range `z = 1 / max(d, 0.1)`, capping z at 10 working units for
//! near-zero inverse depths. One vertex is emitted per valid pixel.

use crate::error::Result;
use crate::raster::{DepthMap, RgbImage};
use std::fmt::Write as _;
use std::path::Path;

const MIN_INVERSE_DEPTH: f64 = 0.1;

pub fn save_point_cloud_ply(
    d: &DepthMap,
    rgb: Option<&RgbImage>,
    path: &Path,
) -> Result<usize> {
    let (w, h) = (d.width(), d.height());
    let fy = (h as f64 / 2.0) / (30.0f64.to_radians()).tan();
    let fx = fy;
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;

    let mut vertices = String::new();
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !d.is_valid(i) {
                continue;
            }
            let z = 1.0 / d.values()[i].max(MIN_INVERSE_DEPTH);
            let px = (x as f64 - cx) / fx * z;
            let py = (y as f64 - cy) / fy * z;
            match rgb {
                Some(img) => {
                    let [r, g, b] = img.pixel(x, y);
                    let to8 = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
                    let _ = writeln!(vertices, "{px} {py} {z} {} {} {}", to8(r), to8(g), to8(b));
                }
                None => {
                    let _ = writeln!(vertices, "{px} {py} {z}");
                }
            }
            count += 1;
        }
    }

    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {count}");
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if rgb.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    out.push_str(&vertices);
    crate::io::atomic_write(path, out.as_bytes())?;
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::tests::tempdir;
    use crate::raster::DepthMap;

    #[test]
    fn vertex_count_equals_valid_pixel_count() {
        let dir = tempdir();
        let values = vec![1.0, 2.0, 3.0, 4.0];
        let valid = vec![true, false, true, true];
        let d = DepthMap::with_validity(2, 2, values, Some(valid)).unwrap();
        let path = dir.join("cloud.ply");
        let n = save_point_cloud_ply(&d, None, &path).unwrap();
        assert_eq!(n, 3);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("element vertex 3"));
        let body = text.split("end_header\n").nth(1).unwrap();
        assert_eq!(body.lines().count(), 3);
        std::fs::remove_dir_all(&dir).ok();
    }
}
