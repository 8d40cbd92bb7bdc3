//! Dataset manifests and train/val/test splits.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::blend::AnomalyRecipe;
use crate::error::{Error, Result};
use crate::planes::ViewAxis;
use crate::rng::RngStream;

use super::raw::{read_json, write_json};

pub const FORMAT_VERSION: &str = "1.0.0";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "val" => Ok(Self::Val),
            "test" => Ok(Self::Test),
            other => Err(Error::InvalidParameter(format!("unknown split {other:?}"))),
        }
    }
}

/// A source volume known to the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest's directory unless absolute.
    pub path: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    #[serde(default)]
    pub group: String,
    #[serde(default)]
    pub split: Option<Split>,
}

/// A k-channel 2.5D stack exported next to a corpus record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackRecord {
    pub axis: ViewAxis,
    pub index: usize,
    pub k: usize,
    pub image: String,
    pub target: String,
    pub image_sha256: String,
    pub target_sha256: String,
}

/// One generated sample: image and target payloads plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub source_id: String,
    pub stream_id: u64,
    pub image: String,
    pub target: String,
    pub image_sha256: String,
    pub target_sha256: String,
    /// Whether the sample carries an anomaly.
    pub anomalous: bool,
    /// Corruption or blend key; `None` for untouched samples.
    pub kind: Option<String>,
    pub recipe: Option<AnomalyRecipe>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stacks: Vec<StackRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub seed: u64,
    #[serde(default)]
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub records: Vec<CorpusRecord>,
    /// Free-form generation settings, recorded for provenance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl Manifest {
    pub fn new(seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            seed,
            entries: Vec::new(),
            records: Vec::new(),
            config: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.format_version.starts_with("1.") {
            return Err(Error::Manifest(format!(
                "unsupported format_version {:?}",
                self.format_version
            )));
        }
        let mut seen = HashSet::new();
        for id in self.entries.iter().map(|e| &e.id) {
            if !seen.insert(id) {
                return Err(Error::Manifest(format!("duplicate entry id {id:?}")));
            }
        }
        let mut seen = HashSet::new();
        for id in self.records.iter().map(|r| &r.id) {
            if !seen.insert(id) {
                return Err(Error::Manifest(format!("duplicate record id {id:?}")));
            }
        }
        Ok(())
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == Some(split))
    }

    pub fn split_counts(&self) -> (usize, usize, usize) {
        let count = |s| self.entries_in(s).count();
        (count(Split::Train), count(Split::Val), count(Split::Test))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = read_json(path)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Train, validation and test sizes for `n` entries.
///
/// The training share is `train_frac * n` rounded half to even; validation is
/// carved from it as `val_frac_of_train * train` with the same rounding.
pub fn split_sizes(n: usize, train_frac: f64, val_frac_of_train: f64) -> Result<(usize, usize, usize)> {
    if !(train_frac > 0.0 && train_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction {train_frac} not in (0, 1]")));
    }
    if !(0.0..1.0).contains(&val_frac_of_train) {
        return Err(Error::InvalidParameter(format!(
            "validation fraction {val_frac_of_train} not in [0, 1)"
        )));
    }
    let train_all = ((train_frac * n as f64).round_ties_even() as usize).min(n);
    let val = ((val_frac_of_train * train_all as f64).round_ties_even() as usize).min(train_all);
    let (train, test) = (train_all - val, n - train_all);
    let missing = [
        (train == 0, "train"),
        (val == 0 && val_frac_of_train > 0.0, "val"),
        (test == 0 && train_frac < 1.0, "test"),
    ];
    if let Some((_, name)) = missing.iter().find(|(empty, _)| *empty) {
        return Err(Error::InvalidParameter(format!(
            "{n} entries are too few to populate the {name} split"
        )));
    }
    Ok((train, val, test))
}

/// Assigns every entry to exactly one split by a seeded shuffle. Entry order
/// and all other fields are kept.
pub fn split_manifest(manifest: &Manifest, train_frac: f64, val_frac_of_train: f64, stream: RngStream) -> Result<Manifest> {
    manifest.validate()?;
    let n = manifest.entries.len();
    let (train, val, _) = split_sizes(n, train_frac, val_frac_of_train)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.rng());
    let mut out = manifest.clone();
    out.seed = stream.seed;
    for (rank, &i) in order.iter().enumerate() {
        out.entries[i].split = Some(if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        });
    }
    Ok(out)
}
