//! Native payload format: little-endian float32, C order, plus a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{check_shape, voxel_count, Volume};

pub const DTYPE_F32: &str = "float32";

/// Contents of `<name>.json` next to `<name>.f32`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub intensity_range: (f64, f64),
    pub id: String,
}

/// `<stem>.f32` and `<stem>.json` for a path with or without the `.f32` extension.
pub fn payload_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = if path.extension().is_some_and(|e| e == "f32") {
        path.with_extension("")
    } else {
        path.to_path_buf()
    };
    let mut data = stem.clone().into_os_string();
    data.push(".f32");
    let mut side = stem.into_os_string();
    side.push(".json");
    (PathBuf::from(data), PathBuf::from(side))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_f32<T: Scalar>(data: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() * 4);
    for v in data {
        out.extend_from_slice(&v.to_f32_lossy().to_le_bytes());
    }
    out
}

pub fn decode_f32<T: Scalar>(bytes: &[u8]) -> Vec<T> {
    bytes
        .chunks_exact(4)
        .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect()
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

pub(crate) fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> Result<D> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
}

/// Writes `<stem>.f32` and `<stem>.json`; returns the SHA-256 of the payload.
pub fn write_raw<T: Scalar>(volume: &Volume<T>, path: &Path) -> Result<String> {
    let (data_path, side_path) = payload_paths(path);
    let bytes = encode_f32(volume.data());
    write_file(&data_path, &bytes)?;
    let (lo, hi) = volume.intensity_range();
    write_json(
        &side_path,
        &Sidecar {
            shape: volume.shape().to_vec(),
            dtype: DTYPE_F32.into(),
            intensity_range: (lo.to_f32_lossy() as f64, hi.to_f32_lossy() as f64),
            id: volume.id().to_string(),
        },
    )?;
    Ok(sha256_hex(&bytes))
}

/// Reads a raw payload and its sidecar; the payload bytes are returned too for checksumming.
pub fn read_raw_with_bytes<T: Scalar>(path: &Path) -> Result<(Volume<T>, Vec<u8>)> {
    let (data_path, side_path) = payload_paths(path);
    let side: Sidecar = read_json(&side_path)?;
    if side.dtype != DTYPE_F32 {
        return Err(Error::BadHeader {
            path: side_path,
            reason: format!("dtype {:?} is not {DTYPE_F32}", side.dtype),
        });
    }
    check_shape(&side.shape).map_err(|e| Error::BadHeader {
        path: side_path.clone(),
        reason: e.to_string(),
    })?;
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let expected = voxel_count(&side.shape) * 4;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: data_path,
            expected,
            found: bytes.len(),
        });
    }
    let data = decode_f32(&bytes);
    let (lo, hi) = side.intensity_range;
    let volume = Volume::new(side.id, side.shape, data, (T::of(lo), T::of(hi)))?;
    Ok((volume, bytes))
}

pub fn read_raw<T: Scalar>(path: &Path) -> Result<Volume<T>> {
    read_raw_with_bytes(path).map(|(v, _)| v)
}
