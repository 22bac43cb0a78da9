//! PNG raster formats: 8-bit RGB images, 8-bit grayscale masks, 16-bit
//! grayscale depth (linearly mapped working range) and 16-bit instance-ID
//! maps.

use crate::compose::DEPTH_RANGE;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, InstanceMap, Mask, RgbImage};
use std::path::Path;

fn decode(path: &Path) -> Result<(png::OutputInfo, Vec<u8>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::MalformedHeader {
            format: "png",
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let mut buf = vec![0u8; reader.output_buffer_size().ok_or_else(|| Error::DimensionOverflow {
        path: path.to_path_buf(),
        width: reader.info().width as u64,
        height: reader.info().height as u64,
    })?];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::MalformedHeader {
        format: "png",
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    buf.truncate(info.buffer_size());
    Ok((info, buf))
}

fn encode(
    path: &Path,
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<()> {
    let mut bytes = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut bytes, width, height);
        encoder.set_color(color);
        encoder.set_depth(depth);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::PngCodec(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::PngCodec(e.to_string()))?;
    }
    crate::io::atomic_write(path, &bytes)
}

pub fn save_rgb_png(img: &RgbImage, path: &Path) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        for c in 0..3 {
            data.push((img.plane(c)[i] * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    encode(path, w as u32, h as u32, png::ColorType::Rgb, png::BitDepth::Eight, &data)
}

pub fn load_rgb_png(path: &Path) -> Result<RgbImage> {
    let (info, buf) = decode(path)?;
    if info.bit_depth != png::BitDepth::Eight || info.color_type != png::ColorType::Rgb {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            bits: info.bit_depth as u32,
        });
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut planes = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for i in 0..w * h {
        for (c, plane) in planes.iter_mut().enumerate() {
            plane[i] = buf[i * 3 + c] as f64 / 255.0;
        }
    }
    RgbImage::new(w, h, planes)
}

pub fn save_mask_png(m: &Mask, path: &Path) -> Result<()> {
    let data: Vec<u8> = m
        .alpha()
        .iter()
        .map(|a| (a * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    encode(
        path,
        m.width() as u32,
        m.height() as u32,
        png::ColorType::Grayscale,
        png::BitDepth::Eight,
        &data,
    )
}

pub fn load_mask_png(path: &Path) -> Result<Mask> {
    let (info, buf) = decode(path)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::MalformedHeader {
            format: "png",
            path: path.to_path_buf(),
            detail: "mask must be grayscale".into(),
        });
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let alpha: Vec<f64> = match info.bit_depth {
        png::BitDepth::Eight => buf.iter().map(|&b| b as f64 / 255.0).collect(),
        png::BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect(),
        other => {
            return Err(Error::UnsupportedBitDepth {
                path: path.to_path_buf(),
                bits: other as u32,
            })
        }
    };
    Mask::new(w, h, alpha)
}

/// 16-bit grayscale depth: [0, 10] mapped linearly onto [0, 65535].
pub fn save_depth_png16(d: &DepthMap, path: &Path) -> Result<()> {
    let mut data = Vec::with_capacity(d.values().len() * 2);
    for (i, &v) in d.values().iter().enumerate() {
        let q = if d.is_valid(i) {
            (v.clamp(0.0, DEPTH_RANGE) / DEPTH_RANGE * 65535.0).round() as u16
        } else {
            0
        };
        data.extend_from_slice(&q.to_be_bytes());
    }
    encode(
        path,
        d.width() as u32,
        d.height() as u32,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )
}

pub fn load_depth_png16(path: &Path) -> Result<DepthMap> {
    let (info, buf) = decode(path)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            bits: info.bit_depth as u32,
        });
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let values: Vec<f64> = buf
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0 * DEPTH_RANGE)
        .collect();
    DepthMap::new(w, h, values)
}

/// Instance IDs as 16-bit grayscale.
pub fn save_instance_png(inst: &InstanceMap, path: &Path) -> Result<()> {
    let mut data = Vec::with_capacity(inst.ids().len() * 2);
    for &id in inst.ids() {
        let clamped = id.min(u16::MAX as u32) as u16;
        data.extend_from_slice(&clamped.to_be_bytes());
    }
    encode(
        path,
        inst.width() as u32,
        inst.height() as u32,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )
}

pub fn load_instance_png(path: &Path) -> Result<InstanceMap> {
    let (info, buf) = decode(path)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            bits: info.bit_depth as u32,
        });
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let ids: Vec<u32> = buf
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
        .collect();
    InstanceMap::new(w, h, ids)
}
