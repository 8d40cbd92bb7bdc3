//! Source volumes: import, toy phantoms and manifest-driven loading.

use std::path::{Path, PathBuf};

use autoseg_core::corrupt::gaussian_blur;
use autoseg_core::io::{self, png::read_png, raw, Manifest, ManifestEntry, Split, VolumeFormat};
use autoseg_core::rng::RngStream;
use autoseg_core::{normalize, Volume32};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub fn manifest_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Rescales into `[0, 1]` unless the stored range already lies inside it.
pub fn ensure_normalized(v: Volume32) -> CliResult<Volume32> {
    let (lo, hi) = v.intensity_range();
    if lo >= 0.0 && hi <= 1.0 {
        Ok(v)
    } else {
        Ok(normalize(&v)?)
    }
}

pub fn load_entry(base: &Path, entry: &ManifestEntry) -> CliResult<Volume32> {
    let path = io::corpus::resolve(base, &entry.path);
    let v: Volume32 = io::read_volume(&path, VolumeFormat::detect(&path)?)?;
    if v.shape() != entry.shape.as_slice() {
        return Err(CliError::Data(format!(
            "{}: shape {:?} differs from manifest shape {:?}",
            path.display(),
            v.shape(),
            entry.shape
        )));
    }
    ensure_normalized(v.with_id(entry.id.clone()))
}

/// Entries of one split, in manifest order.
pub fn split_entries(manifest: &Manifest, split: Split) -> CliResult<Vec<ManifestEntry>> {
    if manifest.entries.iter().all(|e| e.split.is_none()) {
        return Err(CliError::Usage("manifest has no split assignment; run `split` first".into()));
    }
    Ok(manifest.entries_in(split).cloned().collect())
}

pub fn load_entries(base: &Path, entries: &[ManifestEntry]) -> CliResult<Vec<Volume32>> {
    entries.par_iter().map(|e| load_entry(base, e)).collect()
}

/// Head-like phantom: a random ellipsoid of textured tissue (blurred uniform
/// noise mapped to `[0.35, 0.65]`) on a zero background.
pub fn phantom(stream: RngStream, id: String, shape: &[usize], sigma: f64) -> CliResult<Volume32> {
    let n: usize = shape.iter().product();
    let mut rng = stream.rng();
    let noise: Vec<f32> = (0..n).map(|_| rng.random()).collect();
    let v = Volume32::from_data(id, shape.to_vec(), noise)?;
    let v = if sigma > 0.0 { gaussian_blur(&v, sigma)? } else { v };
    let texture = normalize(&Volume32::new(v.id().to_string(), shape.to_vec(), v.data().to_vec(), range_of(v.data()))?)?;
    let axes: Vec<(f64, f64)> = shape
        .iter()
        .map(|&len| {
            let len = len as f64;
            let center = len * (0.5 + rng.random_range(-0.05..=0.05));
            (center, len * rng.random_range(0.35..=0.45))
        })
        .collect();
    let mut data = texture.into_data();
    let mut index = vec![0usize; shape.len()];
    for value in data.iter_mut() {
        let r2: f64 = index
            .iter()
            .zip(&axes)
            .map(|(&i, &(c, a))| ((i as f64 + 0.5 - c) / a).powi(2))
            .sum();
        *value = if r2 <= 1.0 { 0.35 + 0.3 * *value } else { 0.0 };
        for (d, &len) in index.iter_mut().zip(shape).rev() {
            *d += 1;
            if *d < len {
                break;
            }
            *d = 0;
        }
    }
    Ok(Volume32::new(v.id().to_string(), shape.to_vec(), data, (0.0, 1.0))?)
}

fn range_of(data: &[f32]) -> (f32, f32) {
    let lo = data.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = data.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    if lo < hi {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn entry_for(id: &str, shape: &[usize], group: &str) -> ManifestEntry {
    ManifestEntry {
        id: id.to_string(),
        path: format!("volumes/{id}.f32"),
        shape: shape.to_vec(),
        dtype: raw::DTYPE_F32.into(),
        group: group.to_string(),
        split: None,
    }
}

/// Writes `count` phantoms and their manifest into `out`.
pub fn synth(out: &Path, count: usize, shape: &[usize], sigma: f64, seed: u64, group: &str) -> CliResult<Manifest> {
    autoseg_core::volume::check_shape(shape)?;
    let root = RngStream::new(seed, 0);
    let entries = (0..count)
        .into_par_iter()
        .map(|i| {
            let id = format!("vol{i:04}");
            let v = phantom(root.child(i as u64), id.clone(), shape, sigma)?;
            let entry = entry_for(&id, shape, group);
            io::write_volume(&v, &out.join(&entry.path))?;
            Ok(entry)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut manifest = Manifest::new(seed);
    manifest.entries = entries;
    manifest.save(&out.join(io::manifest::MANIFEST_FILE))?;
    Ok(manifest)
}

fn is_volume_file(p: &Path) -> bool {
    VolumeFormat::detect(p).is_ok_and(|f| f != VolumeFormat::RawF32)
        || p.extension().is_some_and(|e| e == "f32")
}

fn stem_id(p: &Path) -> String {
    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    [".nii.gz", ".nii", ".png", ".f32"]
        .iter()
        .find_map(|ext| name.strip_suffix(ext))
        .unwrap_or(&name)
        .to_string()
}

/// Converts NIfTI, PNG or raw files into normalized raw volumes plus a manifest.
pub fn import(inputs: &[PathBuf], out: &Path, resize: Option<(usize, usize)>, group: &str) -> CliResult<Manifest> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let rd = std::fs::read_dir(input).map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
            for e in rd {
                let p = e.map_err(|e| CliError::Data(e.to_string()))?.path();
                if p.is_file() && is_volume_file(&p) {
                    files.push(p);
                }
            }
        } else {
            files.push(input.clone());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage("no input volumes found".into()));
    }
    let entries = files
        .par_iter()
        .map(|p| {
            let v: Volume32 = match VolumeFormat::detect(p)? {
                VolumeFormat::Png => read_png(p, resize)?,
                f => io::read_volume(p, f)?,
            };
            let id = stem_id(p);
            let v = normalize(&v.with_id(id.clone()))?;
            let entry = entry_for(&id, v.shape(), group);
            io::write_volume(&v, &out.join(&entry.path))?;
            Ok(entry)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut manifest = Manifest::new(0);
    manifest.entries = entries;
    manifest.validate()?;
    manifest.save(&out.join(io::manifest::MANIFEST_FILE))?;
    Ok(manifest)
}
