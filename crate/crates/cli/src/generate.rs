//! Training corpora (blended anomalies) and test sets (sphere corruptions).

use std::path::Path;

use autoseg_core::blend::{choose_pair, make_training_sample};
use autoseg_core::corrupt::{make_test_case, plan_test_set};
use autoseg_core::io::{finalize_corpus, write_record, CorpusItem, Manifest, ManifestEntry, StackExport};
use autoseg_core::rng::RngStream;
use autoseg_core::BlendMode;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{TestConfig, TrainConfig};
use crate::data::{load_entries, manifest_dir, split_entries};
use crate::error::{CliError, CliResult};

fn corpus_manifest(seed: u64, entries: Vec<ManifestEntry>, config: serde_json::Value) -> Manifest {
    let mut m = Manifest::new(seed);
    m.entries = entries;
    m.config = Some(config);
    m
}

/// Writes `cfg.count` training samples drawn from the training split.
///
/// Sample `i` uses stream `child(i)` of the root stream; source and donor are
/// two distinct training volumes drawn from that stream.
pub fn gen_train(manifest_path: &Path, out: &Path, cfg: &TrainConfig, seed: u64) -> CliResult<Manifest> {
    let manifest = Manifest::load(manifest_path)?;
    let blend = cfg.blend_spec();
    let poly = cfg.polygon_spec();
    blend.validate()?;
    if blend.mode == BlendMode::AutosegPolygon {
        poly.validate()?;
    }
    let entries = split_entries(&manifest, cfg.split)?;
    let stacks = cfg.stacks.then(|| StackExport {
        k: cfg.k,
        axes: cfg.axes.clone(),
    });
    if cfg.count > 0 && entries.len() < 2 {
        return Err(CliError::Usage(format!(
            "need at least two volumes in the {:?} split, found {}",
            cfg.split,
            entries.len()
        )));
    }
    let volumes = if cfg.count > 0 {
        load_entries(&manifest_dir(manifest_path), &entries)?
    } else {
        Vec::new()
    };
    let root = RngStream::new(seed, 0);
    log::info!("generating {} training samples from {} volumes", cfg.count, volumes.len());
    let records = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let stream = root.child(i as u64);
            let (s, d) = choose_pair(stream, volumes.len())?;
            let sample = make_training_sample(stream, &volumes[s], &volumes[d], &blend, &poly)?;
            Ok(write_record(out, &CorpusItem::from_training(sample, i as u64), stacks.as_ref())?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let config = json!({
        "command": "gen-train",
        "source_manifest": manifest_path.display().to_string(),
        "train": cfg,
    });
    std::fs::create_dir_all(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let mut m = corpus_manifest(seed, entries, config);
    m.records = records;
    finalize_corpus(out, &m)?;
    Ok(m)
}

/// Corrupts the planned fraction of the test split inside random spheres.
pub fn gen_test(manifest_path: &Path, out: &Path, cfg: &TestConfig, seed: u64) -> CliResult<Manifest> {
    let radius_range = cfg
        .radius_range
        .ok_or_else(|| CliError::Usage("the sphere radius range must be set (--radius-range or [test] radius_range)".into()))?;
    cfg.corruption.validate()?;
    let manifest = Manifest::load(manifest_path)?;
    let entries = split_entries(&manifest, cfg.split)?;
    let kinds = cfg.kinds();
    let root = RngStream::new(seed, 0);
    let plan = plan_test_set(root, entries.len(), cfg.anomalous_fraction, &kinds)?;
    let base = manifest_dir(manifest_path);
    log::info!(
        "corrupting {} of {} test volumes",
        plan.iter().filter(|k| k.is_some()).count(),
        entries.len()
    );
    let records = entries
        .par_iter()
        .zip(&plan)
        .enumerate()
        .map(|(i, (entry, kind))| {
            let volume = load_entries(&base, std::slice::from_ref(entry))?.remove(0);
            let case = make_test_case(root, i, &volume, *kind, &cfg.corruption, radius_range)?;
            Ok(write_record(out, &CorpusItem::from_test(case, i as u64), None)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let config = json!({
        "command": "gen-test",
        "source_manifest": manifest_path.display().to_string(),
        "test": cfg,
    });
    std::fs::create_dir_all(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let mut m = corpus_manifest(seed, entries, config);
    m.records = records;
    finalize_corpus(out, &m)?;
    Ok(m)
}
