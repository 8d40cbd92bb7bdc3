//! `autoseg.toml` settings. Every field has a default; flags override file values.

use std::path::{Path, PathBuf};

use autoseg_core::forge::Smoothing;
use autoseg_core::io::Split;
use autoseg_core::{BlendMode, BlendSpec, CorruptionKind, CorruptionParams, Modality, PolygonSpec, ViewAxis};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_FILE: &str = "autoseg.toml";
pub const SEED_ENV: &str = "AUTOSEG_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub train: TrainConfig,
    pub test: TestConfig,
    pub detect: DetectConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub split: Split,
    pub count: usize,
    pub mode: BlendMode,
    pub preset: Modality,
    /// Unset fields fall back to the preset.
    pub num_anomalies: Option<usize>,
    pub vertices: Option<usize>,
    pub size_range: Option<(f64, f64)>,
    pub smoothing: Smoothing,
    pub spline_samples_per_edge: Option<usize>,
    pub alpha_range: (f64, f64),
    pub rect_extent_range: (f64, f64),
    /// Also export k-channel stacks for every record.
    pub stacks: bool,
    pub k: usize,
    pub axes: Vec<ViewAxis>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let blend = BlendSpec::default();
        Self {
            split: Split::Train,
            count: 100,
            mode: blend.mode,
            preset: Modality::Brain,
            num_anomalies: None,
            vertices: None,
            size_range: None,
            smoothing: Smoothing::CubicSpline,
            spline_samples_per_edge: None,
            alpha_range: blend.alpha_range,
            rect_extent_range: blend.rect_extent_range,
            stacks: false,
            k: 3,
            axes: ViewAxis::ALL.to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn polygon_spec(&self) -> PolygonSpec {
        let base = PolygonSpec::preset(self.preset);
        PolygonSpec {
            num_anomalies: self.num_anomalies.unwrap_or(base.num_anomalies),
            vertices: self.vertices.unwrap_or(base.vertices),
            size_range: self.size_range.unwrap_or(base.size_range),
            smoothing: self.smoothing,
            spline_samples_per_edge: self.spline_samples_per_edge.unwrap_or(base.spline_samples_per_edge),
        }
    }

    pub fn blend_spec(&self) -> BlendSpec {
        BlendSpec {
            alpha_range: self.alpha_range,
            mode: self.mode,
            rect_extent_range: self.rect_extent_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub split: Split,
    pub anomalous_fraction: f64,
    /// Sphere radius range as fractions of the smallest extent. No default:
    /// it must come from the file or `--radius-range`.
    pub radius_range: Option<(f64, f64)>,
    /// Empty means all eight kinds.
    pub kinds: Vec<CorruptionKind>,
    pub corruption: CorruptionParams,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            split: Split::Test,
            anomalous_fraction: 0.75,
            radius_range: None,
            kinds: Vec::new(),
            corruption: CorruptionParams::default(),
        }
    }
}

impl TestConfig {
    pub fn kinds(&self) -> Vec<CorruptionKind> {
        if self.kinds.is_empty() {
            CorruptionKind::ALL.to_vec()
        } else {
            self.kinds.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// |A - blur(A)| per plane.
    Residual,
    /// The normalized intensity itself.
    Intensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub detector: Detector,
    pub sigma: f64,
    pub axes: Vec<ViewAxis>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            detector: Detector::Residual,
            sigma: 2.0,
            axes: ViewAxis::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// `max`, `mean` or `top_q:<q>`.
    pub reducer: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { reducer: "max".into() }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Reads `path`, or `./autoseg.toml` when no path is given and it exists.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let path: PathBuf = match path {
            Some(p) => p.to_path_buf(),
            None if Path::new(CONFIG_FILE).is_file() => PathBuf::from(CONFIG_FILE),
            None => return Ok(Self::default()),
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        log::debug!("loaded {}", path.display());
        Self::parse(&text)
    }

    /// Flag, then config file, then `AUTOSEG_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }
}
