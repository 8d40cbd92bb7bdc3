//! Non-learned reference scorers run plane by plane along each view axis,
//! plus fusion of per-axis prediction volumes.

use std::path::{Path, PathBuf};

use autoseg_core::corrupt::gaussian_blur;
use autoseg_core::io::{self, load_record, read_manifest, read_raw, write_volume};
use autoseg_core::planes::{iterate_stacks, PlaneAssembler};
use autoseg_core::{fuse_predictions, ViewAxis, Volume32};
use rayon::prelude::*;

use crate::config::{DetectConfig, Detector};
use crate::error::{CliError, CliResult};

pub const AXES_DIR: &str = "axes";

/// Scores one 2D plane of shape `[h, w]`.
pub fn score_plane(detector: Detector, plane: &[f32], h: usize, w: usize, sigma: f64) -> CliResult<Vec<f32>> {
    match detector {
        Detector::Intensity => Ok(plane.iter().map(|v| v.clamp(0.0, 1.0)).collect()),
        Detector::Residual => {
            let v = Volume32::from_data("plane", vec![h, w], plane.to_vec())?;
            let blurred = gaussian_blur(&v, sigma)?;
            Ok(plane.iter().zip(blurred.data()).map(|(a, b)| (a - b).abs()).collect())
        }
    }
}

/// Axes usable on a volume of `ndim` axes, in the requested order.
pub fn effective_axes(requested: &[ViewAxis], ndim: usize) -> Vec<ViewAxis> {
    let available = ViewAxis::available(ndim);
    let axes: Vec<ViewAxis> = requested.iter().copied().filter(|a| available.contains(a)).collect();
    if axes.is_empty() {
        available[..1].to_vec()
    } else {
        axes
    }
}

/// Per-axis score volumes for one image.
pub fn score_axes(image: &Volume32, cfg: &DetectConfig, axes: &[ViewAxis]) -> CliResult<Vec<Volume32>> {
    axes.iter()
        .map(|&axis| {
            let mut asm = PlaneAssembler::new(image.shape(), axis)?;
            for stack in iterate_stacks(image, 1, &[axis])? {
                let [h, w] = stack.plane_shape;
                let scores = score_plane(cfg.detector, stack.center(), h, w, cfg.sigma)?;
                asm.write(stack.index, &scores)?;
            }
            Ok(asm.finish(image.id())?)
        })
        .collect()
}

fn combine(per_axis: Vec<Volume32>, ndim: usize) -> CliResult<Volume32> {
    match per_axis.len() {
        1 => Ok(per_axis.into_iter().next().expect("one volume")),
        n if n == ViewAxis::available(ndim).len() => Ok(fuse_predictions(&per_axis)?),
        n => Err(CliError::Usage(format!(
            "fusion needs one axis or all {} axes, got {n}",
            ViewAxis::available(ndim).len()
        ))),
    }
}

pub fn prediction_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.f32"))
}

/// Scores every record of a corpus. With several axes the per-axis maps go
/// to `out/axes/<axis>/` and the fused map to `out/<id>.f32`.
pub fn detect_ref(corpus: &Path, out: &Path, cfg: &DetectConfig) -> CliResult<usize> {
    if !(cfg.sigma > 0.0) {
        return Err(CliError::Usage(format!("detector sigma {} must be positive", cfg.sigma)));
    }
    let manifest = read_manifest(corpus)?;
    log::info!("scoring {} records with the {:?} detector", manifest.records.len(), cfg.detector);
    manifest.records.par_iter().try_for_each(|record| -> CliResult<()> {
        let (image, _) = load_record::<f32>(corpus, record)?;
        let axes = effective_axes(&cfg.axes, image.ndim());
        let per_axis = score_axes(&image, cfg, &axes)?;
        if per_axis.len() > 1 {
            for (axis, v) in axes.iter().zip(&per_axis) {
                write_volume(v, &prediction_path(&out.join(AXES_DIR).join(axis.key()), &record.id))?;
            }
        }
        let fused = combine(per_axis, image.ndim())?.with_id(record.id.clone());
        write_volume(&fused, &prediction_path(out, &record.id))?;
        Ok(())
    })?;
    Ok(manifest.records.len())
}

/// Ids of the raw volumes directly inside `dir`, sorted.
pub fn list_ids(dir: &Path) -> CliResult<Vec<String>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut ids = Vec::new();
    for e in rd {
        let p = e.map_err(|e| CliError::Data(e.to_string()))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "f32") {
            if let Some(stem) = p.file_stem() {
                ids.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

/// Averages same-id prediction volumes from several directories.
pub fn fuse_dirs(inputs: &[PathBuf], out: &Path) -> CliResult<usize> {
    let Some(first) = inputs.first() else {
        return Err(CliError::Usage("no input directories".into()));
    };
    let ids = list_ids(first)?;
    for dir in &inputs[1..] {
        if list_ids(dir)? != ids {
            return Err(CliError::Data(format!(
                "{} and {} hold different prediction ids",
                first.display(),
                dir.display()
            )));
        }
    }
    ids.par_iter().try_for_each(|id| -> CliResult<()> {
        let preds = inputs
            .iter()
            .map(|d| read_raw::<f32>(&prediction_path(d, id)))
            .collect::<Result<Vec<_>, _>>()?;
        let fused = fuse_predictions(&preds)?.with_id(id.clone());
        io::write_volume(&fused, &prediction_path(out, id))?;
        Ok(())
    })?;
    Ok(ids.len())
}
