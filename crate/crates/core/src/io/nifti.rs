//! Minimal read-only NIfTI-1 (`.nii`, `.nii.gz`).

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{voxel_count, Volume};

const HEADER_LEN: usize = 348;

/// Header fields the reader honors.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub little_endian: bool,
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub qform_code: i16,
    pub sform_code: i16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiftiType {
    U8,
    I8,
    I16,
    U16,
    I32,
    F32,
    F64,
}

impl NiftiType {
    pub fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => Self::U8,
            4 => Self::I16,
            8 => Self::I32,
            16 => Self::F32,
            64 => Self::F64,
            256 => Self::I8,
            512 => Self::U16,
            other => return Err(Error::UnsupportedDatatype(other)),
        })
    }

    pub fn code(self) -> i16 {
        match self {
            Self::U8 => 2,
            Self::I16 => 4,
            Self::I32 => 8,
            Self::F32 => 16,
            Self::F64 => 64,
            Self::I8 => 256,
            Self::U16 => 512,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::U8 | Self::I8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

struct Fields<'a> {
    b: &'a [u8],
    le: bool,
}

impl Fields<'_> {
    fn i16(&self, at: usize) -> i16 {
        let raw = [self.b[at], self.b[at + 1]];
        if self.le { i16::from_le_bytes(raw) } else { i16::from_be_bytes(raw) }
    }

    fn i32(&self, at: usize) -> i32 {
        let raw = [self.b[at], self.b[at + 1], self.b[at + 2], self.b[at + 3]];
        if self.le { i32::from_le_bytes(raw) } else { i32::from_be_bytes(raw) }
    }

    fn f32(&self, at: usize) -> f32 {
        f32::from_bits(self.i32(at) as u32)
    }
}

impl NiftiHeader {
    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::BadHeader {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let le = match (
            i32::from_le_bytes(bytes[0..4].try_into().unwrap()),
            i32::from_be_bytes(bytes[0..4].try_into().unwrap()),
        ) {
            (348, _) => true,
            (_, 348) => false,
            (n, _) => return Err(bad(format!("sizeof_hdr is {n}, expected 348"))),
        };
        let magic = &bytes[344..348];
        if magic != b"n+1\0" && magic != b"ni1\0" {
            return Err(bad(format!("magic {magic:?} is not a NIfTI-1 signature")));
        }
        if magic == b"ni1\0" {
            return Err(bad("detached header/image pairs are not supported".into()));
        }
        let f = Fields { b: bytes, le };
        let mut dim = [0i16; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            *d = f.i16(40 + 2 * i);
        }
        Ok(Self {
            little_endian: le,
            dim,
            datatype: f.i16(70),
            bitpix: f.i16(72),
            vox_offset: f.f32(108),
            scl_slope: f.f32(112),
            scl_inter: f.f32(116),
            qform_code: f.i16(252),
            sform_code: f.i16(254),
        })
    }

    /// C-order shape: the fastest NIfTI axis (x) becomes the last axis.
    pub fn shape(&self, path: &Path) -> Result<Vec<usize>> {
        let nd = self.dim[0];
        if !(1..=7).contains(&nd) {
            return Err(Error::BadHeader {
                path: path.to_path_buf(),
                reason: format!("dim[0] = {nd}"),
            });
        }
        let mut dims: Vec<usize> = Vec::new();
        for i in 1..=nd as usize {
            let d = self.dim[i];
            if d < 1 {
                return Err(Error::BadHeader {
                    path: path.to_path_buf(),
                    reason: format!("dim[{i}] = {d}"),
                });
            }
            dims.push(d as usize);
        }
        while dims.len() > 3 && dims.last() == Some(&1) {
            dims.pop();
        }
        if dims.len() == 3 && dims[2] == 1 {
            dims.pop();
        }
        if dims.len() == 1 || dims.len() > 3 {
            return Err(Error::BadHeader {
                path: path.to_path_buf(),
                reason: format!("only 2D and 3D images are supported, got dims {dims:?}"),
            });
        }
        dims.reverse();
        Ok(dims)
    }
}

fn load_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn decode<T: Scalar>(payload: &[u8], ty: NiftiType, le: bool, slope: f64, inter: f64) -> Vec<T> {
    let scale = |v: f64| T::of(v * slope + inter);
    macro_rules! each {
        ($n:expr, $conv:expr) => {
            payload
                .chunks_exact($n)
                .map(|c| {
                    let arr = c.try_into().unwrap();
                    scale($conv(arr))
                })
                .collect()
        };
    }
    match (ty, le) {
        (NiftiType::U8, _) => payload.iter().map(|&v| scale(v as f64)).collect(),
        (NiftiType::I8, _) => payload.iter().map(|&v| scale(v as i8 as f64)).collect(),
        (NiftiType::I16, true) => each!(2, |a| i16::from_le_bytes(a) as f64),
        (NiftiType::I16, false) => each!(2, |a| i16::from_be_bytes(a) as f64),
        (NiftiType::U16, true) => each!(2, |a| u16::from_le_bytes(a) as f64),
        (NiftiType::U16, false) => each!(2, |a| u16::from_be_bytes(a) as f64),
        (NiftiType::I32, true) => each!(4, |a| i32::from_le_bytes(a) as f64),
        (NiftiType::I32, false) => each!(4, |a| i32::from_be_bytes(a) as f64),
        (NiftiType::F32, true) => each!(4, |a| f32::from_le_bytes(a) as f64),
        (NiftiType::F32, false) => each!(4, |a| f32::from_be_bytes(a) as f64),
        (NiftiType::F64, true) => each!(8, f64::from_le_bytes),
        (NiftiType::F64, false) => each!(8, f64::from_be_bytes),
    }
}

/// Reads a single-file NIfTI-1 image, gzip-compressed or not.
///
/// Intensities are mapped through `scl_slope`/`scl_inter` when the slope is
/// nonzero. Orientation matrices are not applied; the grid keeps the stored
/// axis order with x varying fastest.
pub fn read_nifti<T: Scalar>(path: &Path) -> Result<Volume<T>> {
    let bytes = load_bytes(path)?;
    let header = NiftiHeader::parse(&bytes, path)?;
    let ty = NiftiType::from_code(header.datatype)?;
    if header.bitpix as usize != ty.size() * 8 {
        return Err(Error::BadHeader {
            path: path.to_path_buf(),
            reason: format!("bitpix {} does not match datatype {}", header.bitpix, header.datatype),
        });
    }
    let shape = header.shape(path)?;
    if header.qform_code > 0 || header.sform_code > 0 {
        log::warn!(
            "{}: orientation (qform {}, sform {}) ignored; using stored axis order",
            path.display(),
            header.qform_code,
            header.sform_code
        );
    }
    let offset = (header.vox_offset as usize).max(HEADER_LEN);
    let need = voxel_count(&shape) * ty.size();
    let found = bytes.len().saturating_sub(offset);
    if found < need {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: need,
            found,
        });
    }
    let payload = &bytes[offset..offset + need];
    let (slope, inter) = if header.scl_slope != 0.0 && header.scl_slope.is_finite() {
        (header.scl_slope as f64, header.scl_inter as f64)
    } else {
        (1.0, 0.0)
    };
    let data = decode(payload, ty, header.little_endian, slope, inter);
    let id = path
        .file_name()
        .map(|n| n.to_string_lossy().trim_end_matches(".gz").trim_end_matches(".nii").to_string())
        .unwrap_or_default();
    Volume::from_data(id, shape, data)
}
