//! Portable Float Map reader/writer.
//!
//! Grayscale PFM: header line `Pf`, a dimensions line `width height`, and a
//! scale line whose sign encodes endianness (negative = little-endian). Pixel
//! data is 32-bit IEEE floats stored bottom row first. The writer always
//! emits little-endian (`-1.0`); the reader accepts both endiannesses.

use crate::error::{Error, Result};
use crate::raster::DepthMap;
use std::path::Path;

fn header_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::MalformedHeader {
        format: "pfm",
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Reads one whitespace-delimited header token.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a [u8]> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(header_err(path, "truncated header"));
    }
    Ok(&bytes[start..*pos])
}

pub fn load_pfm(path: &Path) -> Result<DepthMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos, path)?;
    if magic != b"Pf" {
        if magic == b"PF" {
            return Err(header_err(path, "color PFM not supported, expected grayscale 'Pf'"));
        }
        return Err(header_err(
            path,
            format!("bad magic {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    let parse_dim = |tok: &[u8]| -> Result<u64> {
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| header_err(path, "bad dimensions"))
    };
    let width = parse_dim(next_token(&bytes, &mut pos, path)?)?;
    let height = parse_dim(next_token(&bytes, &mut pos, path)?)?;
    if width == 0 || height == 0 || width.saturating_mul(height) > (1u64 << 30) {
        return Err(Error::DimensionOverflow {
            path: path.to_path_buf(),
            width,
            height,
        });
    }
    let scale_tok = next_token(&bytes, &mut pos, path)?;
    let scale: f64 = std::str::from_utf8(scale_tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| header_err(path, "bad scale"))?;
    if scale == 0.0 {
        return Err(header_err(path, "scale must be non-zero"));
    }
    let little_endian = scale < 0.0;
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let (w, h) = (width as usize, height as usize);
    let need = w * h * 4;
    if bytes.len() < pos + need {
        return Err(header_err(
            path,
            format!("raster truncated: need {need} bytes, have {}", bytes.len() - pos),
        ));
    }
    let mut values = vec![0.0f64; w * h];
    for row in 0..h {
        // PFM stores the bottom row first.
        let y = h - 1 - row;
        for x in 0..w {
            let off = pos + (row * w + x) * 4;
            let raw: [u8; 4] = bytes[off..off + 4].try_into().unwrap();
            let bits = if little_endian {
                u32::from_le_bytes(raw)
            } else {
                u32::from_be_bytes(raw)
            };
            values[y * w + x] = f32::from_bits(bits) as f64;
        }
    }
    let valid: Vec<bool> = values.iter().map(|v| v.is_finite()).collect();
    let validity = if valid.iter().all(|&b| b) {
        None
    } else {
        Some(valid)
    };
    DepthMap::with_validity(w, h, values, validity)
}

pub fn save_pfm(d: &DepthMap, path: &Path) -> Result<()> {
    let (w, h) = (d.width(), d.height());
    let mut out = Vec::with_capacity(32 + w * h * 4);
    out.extend_from_slice(format!("Pf\n{w} {h}\n-1.0\n").as_bytes());
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            let i = y * w + x;
            let v = if d.is_valid(i) {
                d.values()[i] as f32
            } else {
                f32::NAN
            };
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    crate::io::atomic_write(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::tests::tempdir;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir();
        let path = dir.join("rt.pfm");
        // f32-representable values.
        let values: Vec<f64> = (0..12).map(|i| (i as f32 * 0.625f32) as f64).collect();
        let d = DepthMap::new(4, 3, values).unwrap();
        save_pfm(&d, &path).unwrap();
        let back = load_pfm(&path).unwrap();
        for (a, b) in back.values().iter().zip(d.values()) {
            assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
        }
        // Save -> load -> save reproduces the file bytes.
        let path2 = dir.join("rt2.pfm");
        save_pfm(&back, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn golden_negative_scale_fixture_parses() {
        // Hand-built little-endian fixture: 3x2, bottom row (1, 2, 3), top
        // row (4, 5, 6).
        let mut bytes = b"Pf\n3 2\n-1.0\n".to_vec();
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        let dir = tempdir();
        let path = dir.join("golden.pfm");
        std::fs::write(&path, &bytes).unwrap();
        let d = load_pfm(&path).unwrap();
        assert_eq!(d.width(), 3);
        assert_eq!(d.height(), 2);
        // Top raster row comes from the second stored row.
        assert_eq!(d.values(), &[4.0, 5.0, 6.0, 1.0, 2.0, 3.0]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn big_endian_fixture_parses() {
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        for v in [7.5f32, 8.25] {
            bytes.extend_from_slice(&v.to_bits().to_be_bytes());
        }
        let dir = tempdir();
        let path = dir.join("be.pfm");
        std::fs::write(&path, &bytes).unwrap();
        let d = load_pfm(&path).unwrap();
        assert_eq!(d.values(), &[7.5, 8.25]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn malformed_headers_are_distinct_errors() {
        let dir = tempdir();
        let bad_magic = dir.join("bad_magic.pfm");
        std::fs::write(&bad_magic, b"P5\n2 2\n-1.0\n").unwrap();
        assert!(matches!(
            load_pfm(&bad_magic),
            Err(Error::MalformedHeader { format: "pfm", .. })
        ));

        let overflow = dir.join("overflow.pfm");
        std::fs::write(&overflow, b"Pf\n999999999 999999999\n-1.0\n").unwrap();
        assert!(matches!(
            load_pfm(&overflow),
            Err(Error::DimensionOverflow { .. })
        ));

        let truncated = dir.join("trunc.pfm");
        std::fs::write(&truncated, b"Pf\n4 4\n-1.0\nxx").unwrap();
        assert!(matches!(
            load_pfm(&truncated),
            Err(Error::MalformedHeader { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn nan_pixels_become_invalid() {
        let dir = tempdir();
        let mut bytes = b"Pf\n2 1\n-1.0\n".to_vec();
        bytes.extend_from_slice(&f32::NAN.to_bits().to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_bits().to_le_bytes());
        let path = dir.join("nan.pfm");
        std::fs::write(&path, &bytes).unwrap();
        let d = load_pfm(&path).unwrap();
        assert!(!d.is_valid(0));
        assert!(d.is_valid(1));
        std::fs::remove_dir_all(&dir).ok();
    }
}
