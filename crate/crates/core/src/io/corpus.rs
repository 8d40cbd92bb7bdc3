//! Corpus directories: one image/target pair per record plus `manifest.json`.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/images/<id>_<stream>.{f32,json}
//! <dir>/targets/<id>_<stream>.{f32,json}
//! <dir>/stacks/<id>_<stream>/<axis>_<index>.{f32,json}       k-channel image
//! <dir>/stacks/<id>_<stream>/<axis>_<index>_target.{f32,json} center target plane
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::blend::{AnomalyKind, AnomalyRecipe, TrainingSample};
use crate::corrupt::TestCase;
use crate::error::{Error, Result};
use crate::planes::{extract_plane, iterate_stacks, ViewAxis};
use crate::scalar::Scalar;
use crate::volume::{AnomalyMask, Volume};

use super::manifest::{CorpusRecord, Manifest, StackRecord, MANIFEST_FILE};
use super::raw::{read_raw_with_bytes, sha256_hex, write_raw};

/// A sample ready to be written.
#[derive(Debug, Clone)]
pub struct CorpusItem<T> {
    pub source_id: String,
    pub stream_id: u64,
    pub image: Volume<T>,
    pub target: AnomalyMask<T>,
    pub anomalous: bool,
    pub kind: Option<String>,
    pub recipe: Option<AnomalyRecipe>,
}

impl<T> CorpusItem<T> {
    pub fn record_id(&self) -> String {
        format!("{}_{}", self.source_id, self.stream_id)
    }
}

fn kind_key(kind: &AnomalyKind) -> String {
    match kind {
        AnomalyKind::Blend(m) => m.key().to_string(),
        AnomalyKind::Corruption(k) => k.key().to_string(),
    }
}

impl<T: Scalar> CorpusItem<T> {
    pub fn from_training(sample: TrainingSample<T>, stream_id: u64) -> Self {
        Self {
            source_id: sample.recipe.source_id.clone(),
            stream_id,
            image: sample.image,
            target: sample.target,
            anomalous: true,
            kind: Some(kind_key(&sample.recipe.kind)),
            recipe: Some(sample.recipe),
        }
    }

    pub fn from_test(case: TestCase<T>, stream_id: u64) -> Self {
        Self {
            source_id: case.volume.id().to_string(),
            stream_id,
            anomalous: case.kind.is_some(),
            kind: case.kind.map(|k| k.key().to_string()),
            recipe: case.recipe,
            image: case.volume,
            target: case.mask,
        }
    }
}

/// Optional 2.5D stack export.
#[derive(Debug, Clone, PartialEq)]
pub struct StackExport {
    pub k: usize,
    pub axes: Vec<ViewAxis>,
}

fn rel(parts: &[&str]) -> String {
    parts.join("/")
}

fn write_stacks<T: Scalar>(dir: &Path, name: &str, item: &CorpusItem<T>, export: &StackExport) -> Result<Vec<StackRecord>> {
    let target = item.target.to_volume(format!("{name}_target"));
    let mut out = Vec::new();
    for stack in iterate_stacks(&item.image, export.k, &export.axes)? {
        let stem = format!("{}_{}", stack.axis.key(), stack.index);
        let image_rel = rel(&["stacks", name, &stem]);
        let target_rel = rel(&["stacks", name, &format!("{stem}_target")]);
        let [h, w] = stack.plane_shape;
        let image = Volume::from_data(format!("{name}_{stem}"), vec![stack.k, h, w], stack.data)?;
        let plane = extract_plane(&target, stack.axis, stack.index)?;
        let plane = Volume::new(format!("{name}_{stem}_target"), vec![h, w], plane, (T::zero(), T::one()))?;
        out.push(StackRecord {
            axis: stack.axis,
            index: stack.index,
            k: stack.k,
            image_sha256: write_raw(&image, &dir.join(&image_rel))?,
            target_sha256: write_raw(&plane, &dir.join(&target_rel))?,
            image: format!("{image_rel}.f32"),
            target: format!("{target_rel}.f32"),
        });
    }
    Ok(out)
}

/// Writes one record's payloads (and stacks) under `dir`.
pub fn write_record<T: Scalar>(dir: &Path, item: &CorpusItem<T>, stacks: Option<&StackExport>) -> Result<CorpusRecord> {
    let name = item.record_id();
    let image_rel = rel(&["images", &name]);
    let target_rel = rel(&["targets", &name]);
    let image = item.image.clone().with_id(name.clone());
    let image_sha256 = write_raw(&image, &dir.join(&image_rel))?;
    let target_sha256 = write_raw(&item.target.to_volume(name.clone()), &dir.join(&target_rel))?;
    let stacks = match stacks {
        Some(export) => write_stacks(dir, &name, item, export)?,
        None => Vec::new(),
    };
    Ok(CorpusRecord {
        id: name,
        source_id: item.source_id.clone(),
        stream_id: item.stream_id,
        image: format!("{image_rel}.f32"),
        target: format!("{target_rel}.f32"),
        image_sha256,
        target_sha256,
        anomalous: item.anomalous,
        kind: item.kind.clone(),
        recipe: item.recipe.clone(),
        stacks,
    })
}

/// Writes every item in parallel, then the manifest once. `manifest` supplies
/// the seed, entries and config; its records are replaced.
pub fn write_corpus<T: Scalar>(
    dir: &Path,
    items: &[CorpusItem<T>],
    stacks: Option<&StackExport>,
    mut manifest: Manifest,
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    manifest.records = items
        .par_iter()
        .map(|item| write_record(dir, item, stacks))
        .collect::<Result<_>>()?;
    finalize_corpus(dir, &manifest)?;
    Ok(manifest)
}

/// Validates and writes `manifest.json`; the single writer of a corpus.
pub fn finalize_corpus(dir: &Path, manifest: &Manifest) -> Result<()> {
    manifest.validate()?;
    manifest.save(&dir.join(MANIFEST_FILE))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    Manifest::load(&dir.join(MANIFEST_FILE))
}

pub fn resolve(dir: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

/// Reads a raw volume after checking its payload against `sha256`.
pub fn read_verified<T: Scalar>(dir: &Path, path: &str, sha256: &str) -> Result<Volume<T>> {
    let full = resolve(dir, path);
    let (v, bytes) = read_raw_with_bytes(&full)?;
    if sha256_hex(&bytes) != sha256 {
        return Err(Error::ChecksumMismatch(full));
    }
    Ok(v)
}

/// Loads a record's image and target after checking both checksums.
pub fn load_record<T: Scalar>(dir: &Path, record: &CorpusRecord) -> Result<(Volume<T>, AnomalyMask<T>)> {
    let image = read_verified(dir, &record.image, &record.image_sha256)?;
    let target = AnomalyMask::from_volume(&read_verified(dir, &record.target, &record.target_sha256)?)?;
    Ok((image, target))
}

/// Checks every payload of a corpus, stacks included; returns the number of
/// files verified.
pub fn verify_corpus(dir: &Path, manifest: &Manifest) -> Result<usize> {
    let counts = manifest
        .records
        .par_iter()
        .map(|r| {
            load_record::<f32>(dir, r)?;
            for s in &r.stacks {
                read_verified::<f32>(dir, &s.image, &s.image_sha256)?;
                read_verified::<f32>(dir, &s.target, &s.target_sha256)?;
            }
            Ok(2 + 2 * r.stacks.len())
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(counts.into_iter().sum())
}
