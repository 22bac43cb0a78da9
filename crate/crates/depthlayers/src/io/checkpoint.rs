//! Self-describing binary checkpoint: magic "DLYR", format version, then
//! named tensors with explicit shapes and little-endian f64 payloads.

use crate::error::{Error, Result};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DLYR";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<u32>,
    pub data: Vec<f64>,
}

impl NamedTensor {
    pub fn scalar(name: &str, value: f64) -> NamedTensor {
        NamedTensor {
            name: name.to_string(),
            shape: vec![1],
            data: vec![value],
        }
    }
}

pub fn save_named_tensors(tensors: &[NamedTensor], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        let name = t.name.as_bytes();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &dim in &t.shape {
            out.extend_from_slice(&dim.to_le_bytes());
        }
        let count: usize = t.shape.iter().map(|&d| d as usize).product();
        debug_assert_eq!(count, t.data.len());
        for &v in &t.data {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    crate::io::atomic_write(path, &out)
}

pub fn load_named_tensors(path: &Path) -> Result<Vec<NamedTensor>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let err = |detail: &str| Error::Checkpoint {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(err("truncated"));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 4)? != MAGIC {
        return Err(err("bad magic, expected DLYR"));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(err(&format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    let mut tensors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
            .map_err(|_| err("tensor name is not utf-8"))?;
        let ndim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let mut shape = Vec::with_capacity(ndim);
        let mut total = 1usize;
        for _ in 0..ndim {
            let dim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
            total = total
                .checked_mul(dim as usize)
                .ok_or_else(|| err("shape overflow"))?;
            shape.push(dim);
        }
        let raw = take(&mut pos, total * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        tensors.push(NamedTensor { name, shape, data });
    }
    Ok(tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::tests::tempdir;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir();
        let path = dir.join("ckpt.dlyr");
        let tensors = vec![
            NamedTensor {
                name: "enc/weight".into(),
                shape: vec![2, 3],
                data: vec![1.5, -2.25, 1e-300, 0.0, f64::MIN_POSITIVE, 7.0],
            },
            NamedTensor::scalar("meta/step", 42.0),
        ];
        save_named_tensors(&tensors, &path).unwrap();
        let back = load_named_tensors(&path).unwrap();
        assert_eq!(back, tensors);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bad_magic_is_checkpoint_error() {
        let dir = tempdir();
        let path = dir.join("bad.dlyr");
        std::fs::write(&path, b"NOPE....").unwrap();
        assert!(matches!(
            load_named_tensors(&path),
            Err(Error::Checkpoint { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}
