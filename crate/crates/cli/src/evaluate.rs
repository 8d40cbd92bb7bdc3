//! Pixel- and sample-level AP of a prediction directory against a corpus.
//!
//! Every row restricted to one kind pools that kind's volumes with the
//! unaltered volumes, so a row's positives are exactly the voxels (or
//! samples) of that kind and the per-kind positive counts sum to the total.

use std::collections::BTreeMap;
use std::path::Path;

use autoseg_core::io::corpus::read_verified;
use autoseg_core::io::{read_manifest, read_raw, CorpusRecord};
use autoseg_core::metrics::{ApBuilder, ApCounter, ApResult, ReportRow};
use autoseg_core::{CorruptionKind, Error, Reducer, Volume32};
use rayon::prelude::*;

use crate::detect::{list_ids, prediction_path};
use crate::error::{CliError, CliResult};

fn load_pair(corpus: &Path, preds: &Path, r: &CorpusRecord) -> CliResult<(Volume32, Volume32)> {
    let path = prediction_path(preds, &r.id);
    if !path.is_file() {
        return Err(CliError::Data(format!("no prediction for record {} in {}", r.id, preds.display())));
    }
    let pred = read_raw::<f32>(&path)?;
    let target = read_verified::<f32>(corpus, &r.target, &r.target_sha256)?;
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            expected: target.shape().to_vec(),
            actual: pred.shape().to_vec(),
        }
        .into());
    }
    Ok((pred, target))
}

/// Kind keys in table order: the eight corruptions first, then anything else
/// alphabetically.
fn ordered_kinds(records: &[CorpusRecord]) -> Vec<String> {
    let mut kinds: Vec<String> = records.iter().filter_map(|r| r.kind.clone()).collect();
    kinds.sort_by_key(|k| {
        let rank = CorruptionKind::ALL.iter().position(|c| c.key() == k).unwrap_or(usize::MAX);
        (rank, k.clone())
    });
    kinds.dedup();
    kinds
}

/// Which groups a record's negatives count toward: the pooled group `None`
/// plus its own kind, or every kind for unaltered volumes.
fn groups_of<'a>(r: &'a CorpusRecord, kinds: &'a [String]) -> Vec<Option<&'a str>> {
    let mut g = vec![None];
    match &r.kind {
        Some(k) => g.push(Some(k.as_str())),
        None => g.extend(kinds.iter().map(|k| Some(k.as_str()))),
    }
    g
}

struct Counters(BTreeMap<Option<String>, ApCounter>);

impl Counters {
    fn fresh(bases: &BTreeMap<Option<String>, ApCounter>) -> Self {
        Self(bases.iter().map(|(k, c)| (k.clone(), c.fresh())).collect())
    }

    fn merge(mut self, other: Self) -> Self {
        for (k, c) in other.0 {
            if let Some(mine) = self.0.get_mut(&k) {
                mine.merge(&c);
            }
        }
        self
    }
}

fn row(dataset: &str, kind: Option<&str>, level: &str, r: &ApResult) -> ReportRow {
    ReportRow {
        dataset: dataset.to_string(),
        kind: kind.unwrap_or("all").to_string(),
        level: level.to_string(),
        ap: r.ap,
        prevalence: r.prevalence(),
        n: r.num_total,
        num_pos: r.num_pos,
    }
}

fn push_row(rows: &mut Vec<ReportRow>, dataset: &str, kind: Option<&str>, level: &str, result: autoseg_core::Result<ApResult>) -> CliResult<()> {
    match result {
        Ok(r) => rows.push(row(dataset, kind, level, &r)),
        Err(Error::UndefinedMetric(m)) => log::warn!("{} {level} AP undefined: {m}", kind.unwrap_or("all")),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

/// Pooled and per-kind pixel AP (label = target > 0) and sample AP (one
/// reduced score per volume, label = record is anomalous).
pub fn evaluate(corpus: &Path, preds: &Path, reducer: Reducer, dataset: &str) -> CliResult<Vec<ReportRow>> {
    let manifest = read_manifest(corpus)?;
    let records = &manifest.records;
    if records.is_empty() {
        return Err(CliError::Data(format!("corpus {} has no records", corpus.display())));
    }
    let known: std::collections::HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    if let Some(extra) = list_ids(preds)?.into_iter().find(|id| !known.contains(id.as_str())) {
        return Err(CliError::Data(format!("prediction {extra} matches no corpus record")));
    }
    let kinds = ordered_kinds(records);

    let first: Vec<(Vec<f64>, f64)> = records
        .par_iter()
        .map(|r| {
            let (pred, target) = load_pair(corpus, preds, r)?;
            let positives = pred
                .data()
                .iter()
                .zip(target.data())
                .filter(|(_, t)| **t > 0.0)
                .map(|(s, _)| *s as f64)
                .collect();
            Ok((positives, reducer.reduce(pred.data())?))
        })
        .collect::<CliResult<_>>()?;

    let mut builders: BTreeMap<Option<String>, ApBuilder> = BTreeMap::new();
    builders.insert(None, ApBuilder::new());
    for k in &kinds {
        builders.insert(Some(k.clone()), ApBuilder::new());
    }
    for (r, (positives, _)) in records.iter().zip(&first) {
        for &s in positives {
            builders.get_mut(&None).expect("pooled group").add_positive(s, 1.0)?;
            if let Some(k) = &r.kind {
                builders.get_mut(&Some(k.clone())).expect("kind group").add_positive(s, 1.0)?;
            }
        }
    }
    let bases: BTreeMap<Option<String>, ApCounter> = builders.into_iter().map(|(k, b)| (k, b.freeze())).collect();

    let totals = records
        .par_iter()
        .try_fold(
            || Counters::fresh(&bases),
            |mut acc, r| -> CliResult<Counters> {
                let (pred, target) = load_pair(corpus, preds, r)?;
                for g in groups_of(r, &kinds) {
                    let counter = acc.0.get_mut(&g.map(str::to_string)).expect("group counter");
                    counter.add_negatives(
                        pred.data()
                            .iter()
                            .zip(target.data())
                            .filter(|(_, t)| **t <= 0.0)
                            .map(|(s, _)| *s as f64),
                    )?;
                }
                Ok(acc)
            },
        )
        .try_reduce(|| Counters::fresh(&bases), |a, b| Ok(a.merge(b)))?;

    let mut rows = Vec::new();
    let mut keys: Vec<Option<&str>> = kinds.iter().map(|k| Some(k.as_str())).collect();
    keys.push(None);
    for key in keys {
        let counter = &totals.0[&key.map(str::to_string)];
        push_row(&mut rows, dataset, key, "pixel", counter.finish())?;
        let (scores, labels): (Vec<f64>, Vec<bool>) = records
            .iter()
            .zip(&first)
            .filter(|(r, _)| key.is_none() || r.kind.is_none() || r.kind.as_deref() == key)
            .map(|(r, (_, s))| (*s, r.anomalous))
            .unzip();
        let sample = autoseg_core::ScoredSet::new(scores, labels).and_then(|s| autoseg_core::average_precision(&s));
        push_row(&mut rows, dataset, key, "sample", sample)?;
    }
    Ok(rows)
}
