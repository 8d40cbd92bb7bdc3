//! Average precision with tied scores grouped into a single threshold.
//!
//! AP only changes at thresholds where positives sit, so the computation keeps
//! the distinct positive scores and counts, for each of them, the negative
//! weight scored at or above it. Negatives can therefore be streamed without
//! being stored, which keeps pooled pixel-level AP over many volumes cheap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average precision and the precision-recall points it integrates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    pub ap: f64,
    pub num_pos: usize,
    pub num_total: usize,
    /// `(recall, precision)` at every threshold holding a positive, in
    /// decreasing-threshold order.
    pub curve: Vec<(f64, f64)>,
}

impl ApResult {
    /// Fraction of positives; the expected AP of an uninformative scorer.
    pub fn prevalence(&self) -> f64 {
        if self.num_total == 0 {
            0.0
        } else {
            self.num_pos as f64 / self.num_total as f64
        }
    }
}

fn check_score(s: f64) -> Result<f64> {
    if s.is_nan() {
        return Err(Error::UndefinedMetric("NaN score".into()));
    }
    Ok(s)
}

/// First pass: collects positive scores.
#[derive(Debug, Default, Clone)]
pub struct ApBuilder {
    positives: Vec<(f64, f64)>,
}

impl ApBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_positive(&mut self, score: f64, weight: f64) -> Result<()> {
        self.positives.push((check_score(score)?, weight));
        Ok(())
    }

    pub fn num_positives(&self) -> usize {
        self.positives.len()
    }

    /// Fixes the thresholds; negatives are added to the returned counter.
    pub fn freeze(mut self) -> ApCounter {
        self.positives.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut thresholds: Vec<f64> = Vec::new();
        let mut pos_weight: Vec<f64> = Vec::new();
        for &(s, w) in &self.positives {
            if thresholds.last() == Some(&s) {
                *pos_weight.last_mut().expect("parallel vectors") += w;
            } else {
                thresholds.push(s);
                pos_weight.push(w);
            }
        }
        let n = thresholds.len();
        ApCounter {
            thresholds,
            pos_weight,
            neg_bucket: vec![0.0; n],
            num_pos: self.positives.len(),
            num_neg: 0,
        }
    }
}

/// Second pass: accumulates negatives against frozen positive thresholds.
#[derive(Debug, Clone)]
pub struct ApCounter {
    /// Distinct positive scores, strictly decreasing.
    thresholds: Vec<f64>,
    pos_weight: Vec<f64>,
    /// Weight of negatives whose highest reached threshold is `thresholds[k]`.
    neg_bucket: Vec<f64>,
    num_pos: usize,
    num_neg: usize,
}

impl ApCounter {
    /// Index of the first (highest) threshold `<= score`.
    #[inline]
    fn bucket_of(&self, score: f64) -> usize {
        self.thresholds.partition_point(|&t| t > score)
    }

    pub fn add_negative(&mut self, score: f64, weight: f64) -> Result<()> {
        let k = self.bucket_of(check_score(score)?);
        if k < self.neg_bucket.len() {
            self.neg_bucket[k] += weight;
        }
        self.num_neg += 1;
        Ok(())
    }

    /// Adds a batch of unit-weight negatives; usable from worker threads via
    /// [`ApCounter::fresh`] and [`ApCounter::merge`].
    pub fn add_negatives(&mut self, scores: impl IntoIterator<Item = f64>) -> Result<()> {
        for s in scores {
            self.add_negative(s, 1.0)?;
        }
        Ok(())
    }

    /// Copy with the same thresholds and no negatives.
    pub fn fresh(&self) -> Self {
        Self {
            thresholds: self.thresholds.clone(),
            pos_weight: self.pos_weight.clone(),
            neg_bucket: vec![0.0; self.thresholds.len()],
            num_pos: self.num_pos,
            num_neg: 0,
        }
    }

    /// Adds the negatives counted by `other` (which must share thresholds).
    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.thresholds, other.thresholds);
        for (a, b) in self.neg_bucket.iter_mut().zip(&other.neg_bucket) {
            *a += b;
        }
        self.num_neg += other.num_neg;
    }

    pub fn finish(&self) -> Result<ApResult> {
        if self.num_pos == 0 {
            return Err(Error::UndefinedMetric("average precision needs at least one positive".into()));
        }
        let total_pos: f64 = self.pos_weight.iter().sum();
        if !(total_pos > 0.0) {
            return Err(Error::UndefinedMetric("total positive weight is zero".into()));
        }
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut prev_recall = 0.0;
        let mut ap = 0.0;
        let mut curve = Vec::with_capacity(self.thresholds.len());
        for k in 0..self.thresholds.len() {
            tp += self.pos_weight[k];
            fp += self.neg_bucket[k];
            let recall = tp / total_pos;
            let precision = tp / (tp + fp);
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
            curve.push((recall, precision));
        }
        Ok(ApResult {
            ap,
            num_pos: self.num_pos,
            num_total: self.num_pos + self.num_neg,
            curve,
        })
    }
}

/// Scores with binary labels and optional per-item weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub weights: Option<Vec<f64>>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        Ok(Self {
            scores,
            labels,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.scores.len() {
            return Err(Error::InvalidParameter("weights length differs from scores".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }
}

/// AP = Σ_k (R_k − R_{k−1}) · P_k over decreasing score thresholds, all items
/// sharing a score forming one threshold.
pub fn average_precision(set: &ScoredSet) -> Result<ApResult> {
    if set.scores.len() != set.labels.len() {
        return Err(Error::InvalidParameter("scores and labels differ in length".into()));
    }
    let mut builder = ApBuilder::new();
    for (i, (&s, &l)) in set.scores.iter().zip(&set.labels).enumerate() {
        if l {
            builder.add_positive(s, set.weight(i))?;
        }
    }
    let mut counter = builder.freeze();
    for (i, (&s, &l)) in set.scores.iter().zip(&set.labels).enumerate() {
        if !l {
            counter.add_negative(s, set.weight(i))?;
        }
    }
    counter.finish()
}
