//! File formats: PFM and PNG rasters, binary checkpoints, JSON reports and
//! ASCII PLY point clouds. All writes are atomic (temp file + rename) so a
//! killed run never leaves truncated artifacts.

mod checkpoint;
mod pfm;
mod png_io;
mod ply;

pub use checkpoint::{load_named_tensors, save_named_tensors, NamedTensor};
pub use pfm::{load_pfm, save_pfm};
pub use png_io::{
    load_instance_png, load_mask_png, load_rgb_png, save_depth_png16, save_instance_png,
    save_mask_png, save_rgb_png,
};
pub use png_io::load_depth_png16;
pub use ply::save_point_cloud_ply;

use crate::error::{Error, Result};
use crate::raster::DepthMap;
use std::path::Path;

/// Writes `bytes` to `path` atomically: a unique temp file in the same
/// directory is written, flushed, then renamed over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let tmp = dir.join(format!(".{stem}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn save_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("json encode: {e}")))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedHeader {
        format: "json",
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Loads a depth map, dispatching on the file extension: `.pfm` or a 16-bit
/// grayscale `.png` linearly mapped to [0, 10].
pub fn load_depth(path: &Path) -> Result<DepthMap> {
    match extension(path)?.as_str() {
        "pfm" => load_pfm(path),
        "png" => load_depth_png16(path),
        other => Err(Error::MalformedHeader {
            format: "depth",
            path: path.to_path_buf(),
            detail: format!("unsupported extension '{other}'"),
        }),
    }
}

/// Saves a depth map, dispatching on the file extension.
pub fn save_depth(d: &DepthMap, path: &Path) -> Result<()> {
    match extension(path)?.as_str() {
        "pfm" => save_pfm(d, path),
        "png" => save_depth_png16(d, path),
        other => Err(Error::MalformedHeader {
            format: "depth",
            path: path.to_path_buf(),
            detail: format!("unsupported extension '{other}'"),
        }),
    }
}

fn extension(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| Error::MalformedHeader {
            format: "depth",
            path: path.to_path_buf(),
            detail: "missing file extension".into(),
        })
}
