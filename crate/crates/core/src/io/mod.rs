//! Volume ingestion, corpus serialization and dataset manifests.

pub mod corpus;
pub mod manifest;
pub mod nifti;
pub mod png;
pub mod raw;

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::Volume;

pub use corpus::{finalize_corpus, load_record, read_manifest, verify_corpus, write_corpus, write_record, CorpusItem, StackExport};
pub use manifest::{split_manifest, split_sizes, CorpusRecord, Manifest, ManifestEntry, Split, StackRecord};
pub use raw::{read_raw, write_raw, Sidecar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeFormat {
    RawF32,
    Nifti1,
    Png,
}

impl VolumeFormat {
    /// Guesses the format from the file name.
    pub fn detect(path: &Path) -> Result<Self> {
        let name = path.file_name().map(|n| n.to_string_lossy().to_lowercase()).unwrap_or_default();
        if name.ends_with(".nii") || name.ends_with(".nii.gz") {
            Ok(Self::Nifti1)
        } else if name.ends_with(".png") {
            Ok(Self::Png)
        } else if name.ends_with(".f32") || name.ends_with(".json") {
            Ok(Self::RawF32)
        } else {
            Err(Error::InvalidParameter(format!("cannot tell the format of {}", path.display())))
        }
    }
}

pub fn read_volume<T: Scalar>(path: &Path, format: VolumeFormat) -> Result<Volume<T>> {
    match format {
        VolumeFormat::RawF32 => read_raw(path),
        VolumeFormat::Nifti1 => nifti::read_nifti(path),
        VolumeFormat::Png => png::read_png(path, None),
    }
}

/// Writes the native raw format; returns the payload's SHA-256.
pub fn write_volume<T: Scalar>(volume: &Volume<T>, path: &Path) -> Result<String> {
    write_raw(volume, path)
}
