//! Pixel- and sample-level average precision.

pub mod ap;
pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{AnomalyMask, Volume};

pub use ap::{average_precision, ApBuilder, ApCounter, ApResult, ScoredSet};
pub use report::{format_kind_table, write_jsonl, ReportRow};

/// Collapses a voxel score map to one sample score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    #[default]
    Max,
    Mean,
    /// Mean of the top `ceil(q · n)` voxel scores (at least one).
    TopQ(f64),
}

impl Reducer {
    pub fn reduce<T: Scalar>(&self, scores: &[T]) -> Result<f64> {
        if scores.is_empty() {
            return Err(Error::UndefinedMetric("cannot reduce an empty score map".into()));
        }
        let v = match *self {
            Reducer::Max => scores.iter().map(|s| s.wide()).fold(f64::NEG_INFINITY, f64::max),
            Reducer::Mean => scores.iter().map(|s| s.wide()).sum::<f64>() / scores.len() as f64,
            Reducer::TopQ(q) => {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(Error::InvalidParameter(format!("top_q fraction {q} outside (0, 1]")));
                }
                let m = ((q * scores.len() as f64).ceil() as usize).clamp(1, scores.len());
                let mut v: Vec<f64> = scores.iter().map(|s| s.wide()).collect();
                let pivot = scores.len() - m;
                v.select_nth_unstable_by(pivot, f64::total_cmp);
                let mut top = v[pivot..].to_vec();
                top.sort_by(f64::total_cmp);
                top.iter().sum::<f64>() / m as f64
            }
        };
        Ok(v)
    }
}

impl std::str::FromStr for Reducer {
    type Err = Error;

    /// `max`, `mean`, `top_q:<q>` or `top_q(<q>)`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Reducer::Max),
            "mean" => Ok(Reducer::Mean),
            _ => {
                let arg = s
                    .strip_prefix("top_q:")
                    .or_else(|| s.strip_prefix("top_q(").and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown reducer {s:?}")))?;
                let q: f64 = arg
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad top_q fraction {arg:?}")))?;
                if !(q > 0.0 && q <= 1.0) {
                    return Err(Error::InvalidParameter(format!("top_q fraction {q} outside (0, 1]")));
                }
                Ok(Reducer::TopQ(q))
            }
        }
    }
}

impl std::fmt::Display for Reducer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reducer::Max => f.write_str("max"),
            Reducer::Mean => f.write_str("mean"),
            Reducer::TopQ(q) => write!(f, "top_q:{q}"),
        }
    }
}

fn check_pairs<T: Scalar>(preds: &[Volume<T>], masks: &[AnomalyMask<T>]) -> Result<()> {
    if preds.len() != masks.len() {
        return Err(Error::InvalidParameter(format!(
            "{} predictions but {} masks",
            preds.len(),
            masks.len()
        )));
    }
    for (p, m) in preds.iter().zip(masks) {
        if p.shape() != m.shape() {
            return Err(Error::ShapeMismatch {
                expected: m.shape().to_vec(),
                actual: p.shape().to_vec(),
            });
        }
    }
    Ok(())
}

/// Pools every voxel of every volume into one ranking (label = mask > 0).
pub fn pixel_ap<T: Scalar>(preds: &[Volume<T>], masks: &[AnomalyMask<T>]) -> Result<ApResult> {
    check_pairs(preds, masks)?;
    let mut builder = ApBuilder::new();
    for (p, m) in preds.iter().zip(masks) {
        for (s, l) in p.data().iter().zip(m.values()) {
            if *l > T::zero() {
                builder.add_positive(s.wide(), 1.0)?;
            }
        }
    }
    let base = builder.freeze();
    let total = preds
        .par_iter()
        .zip(masks)
        .try_fold(
            || base.fresh(),
            |mut c, (p, m)| {
                c.add_negatives(
                    p.data()
                        .iter()
                        .zip(m.values())
                        .filter(|(_, l)| **l <= T::zero())
                        .map(|(s, _)| s.wide()),
                )?;
                Ok::<_, Error>(c)
            },
        )
        .try_reduce(
            || base.fresh(),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )?;
    total.finish()
}

/// One score per volume via `reducer`, ranked against binary sample labels.
pub fn sample_ap<T: Scalar>(preds: &[Volume<T>], labels: &[bool], reducer: Reducer) -> Result<ApResult> {
    if preds.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let scores = preds
        .par_iter()
        .map(|p| reducer.reduce(p.data()))
        .collect::<Result<Vec<_>>>()?;
    average_precision(&ScoredSet::new(scores, labels.to_vec())?)
}
