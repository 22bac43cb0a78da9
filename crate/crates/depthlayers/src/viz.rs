//! Visualization emitters: colormapped depth PNGs and signed improvement
//! maps on a diverging palette.

use crate::compose::DEPTH_RANGE;
use crate::error::Result;
use crate::raster::{DepthMap, RgbImage};
use std::path::Path;

/// Monotone depth palette: a dark-blue to warm-yellow ramp. Every channel is
/// non-decreasing in the input, so the quantized luminance never dips.
pub fn colormap_depth(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let r = 15.0 + 240.0 * t;
    let g = 10.0 + 235.0 * (t * t * (3.0 - 2.0 * t)); // smoothstep, monotone on [0,1]
    let b = 60.0 + 80.0 * t;
    [
        r.round().clamp(0.0, 255.0) as u8,
        g.round().clamp(0.0, 255.0) as u8,
        b.round().clamp(0.0, 255.0) as u8,
    ]
}

/// Rec. 709 luminance of an sRGB-ish triple, used by the monotonicity test
/// and exposed for tooling.
pub fn luminance(rgb: [u8; 3]) -> f64 {
    0.2126 * rgb[0] as f64 + 0.7152 * rgb[1] as f64 + 0.0722 * rgb[2] as f64
}

/// Diverging palette for signed improvement values: blue (worsened) through
/// white (zero) to red (improved).
pub fn colormap_diverging(t: f64) -> [u8; 3] {
    let t = t.clamp(-1.0, 1.0);
    if t >= 0.0 {
        let s = t;
        [
            255,
            (255.0 * (1.0 - 0.75 * s)).round() as u8,
            (255.0 * (1.0 - s)).round() as u8,
        ]
    } else {
        let s = -t;
        [
            (255.0 * (1.0 - s)).round() as u8,
            (255.0 * (1.0 - 0.55 * s)).round() as u8,
            255,
        ]
    }
}

/// Colormapped depth PNG over the working range.
pub fn save_depth_colormap(d: &DepthMap, path: &Path) -> Result<()> {
    let (w, h) = (d.width(), d.height());
    let mut planes = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for i in 0..w * h {
        let rgb = if d.is_valid(i) {
            colormap_depth(d.values()[i] / DEPTH_RANGE)
        } else {
            [0, 0, 0]
        };
        for c in 0..3 {
            planes[c][i] = rgb[c] as f64 / 255.0;
        }
    }
    let img = RgbImage::new(w, h, planes)?;
    crate::io::save_rgb_png(&img, path)
}

/// Signed improvement-map PNG; `scale` maps the value that saturates the
/// palette (improvements of `scale` and beyond show fully red).
pub fn save_improvement_png(map: &DepthMap, scale: f64, path: &Path) -> Result<()> {
    let (w, h) = (map.width(), map.height());
    let mut planes = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for i in 0..w * h {
        let rgb = colormap_diverging(map.values()[i] / scale.max(1e-12));
        for c in 0..3 {
            planes[c][i] = rgb[c] as f64 / 255.0;
        }
    }
    let img = RgbImage::new(w, h, planes)?;
    crate::io::save_rgb_png(&img, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_colormap_luminance_is_monotone() {
        // Non-decreasing at fine steps (8-bit quantization allows plateaus),
        // strictly increasing over coarse steps.
        let mut last = -1.0;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let lum = luminance(colormap_depth(t));
            assert!(lum >= last, "t = {t}: {lum} < {last}");
            last = lum;
        }
        for i in 0..10 {
            let a = luminance(colormap_depth(i as f64 / 10.0));
            let b = luminance(colormap_depth((i + 1) as f64 / 10.0));
            assert!(b > a, "coarse step {i}");
        }
    }

    #[test]
    fn diverging_palette_is_neutral_at_zero() {
        assert_eq!(colormap_diverging(0.0), [255, 255, 255]);
        let worse = colormap_diverging(-1.0);
        let better = colormap_diverging(1.0);
        assert!(worse[2] > worse[0]);
        assert!(better[0] > better[2]);
    }
}
