use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the generators, samplers, metrics and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate intensity range: lo == hi == {0}")]
    DegenerateRange(f64),

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("infeasible region: {0}")]
    InfeasibleRegion(String),

    #[error("region contains no voxels")]
    EmptyRegion,

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("index {index} out of range for axis of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bad header in {path}: {reason}")]
    BadHeader { path: PathBuf, reason: String },

    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),

    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("checksum mismatch for {0}")]
    ChecksumMismatch(PathBuf),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("png error on {path}: {reason}")]
    Png { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data (as opposed to bad configuration).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidVolume(_)
                | Error::ShapeMismatch { .. }
                | Error::BadHeader { .. }
                | Error::UnsupportedDatatype(_)
                | Error::Truncated { .. }
                | Error::ChecksumMismatch(_)
                | Error::Io { .. }
                | Error::Json { .. }
                | Error::Png { .. }
                | Error::DegenerateRange(_)
                | Error::EmptyRegion
                | Error::UndefinedMetric(_)
        )
    }
}
