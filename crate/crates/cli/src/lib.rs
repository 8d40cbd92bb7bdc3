//! `autoseg` command line: source volumes, splits, training corpora, test
//! sets, reference detectors, fusion and evaluation.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for data
//! errors. Logs go to standard error; tables and counts to standard output.

pub mod config;
pub mod data;
pub mod detect;
pub mod error;
pub mod evaluate;
pub mod generate;

use std::io::Write;
use std::path::{Path, PathBuf};

use autoseg_core::io::png::export_slice;
use autoseg_core::io::{self, split_manifest, verify_corpus, Manifest, Split, VolumeFormat};
use autoseg_core::metrics::{format_kind_table, write_jsonl};
use autoseg_core::planes::axis_len;
use autoseg_core::rng::RngStream;
use autoseg_core::{BlendMode, CorruptionKind, Modality, Reducer, ViewAxis, Volume32};
use clap::{Args, Parser, Subcommand};

pub use config::Config;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "autoseg", version, about = "Synthetic anomaly corpora for anomaly segmentation")]
pub struct Cli {
    /// Settings file; defaults to ./autoseg.toml when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; falls back to the config file, then AUTOSEG_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors on standard error.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write head-like phantom volumes and their manifest.
    Synth(SynthArgs),
    /// Convert NIfTI, PNG or raw files into normalized raw volumes.
    Import(ImportArgs),
    /// Assign train/val/test splits.
    Split(SplitArgs),
    /// Build a training corpus of blended anomalies.
    GenTrain(GenTrainArgs),
    /// Build a test set of sphere corruptions.
    GenTest(GenTestArgs),
    /// Score a corpus with a non-learned reference detector.
    DetectRef(DetectArgs),
    /// Average per-axis prediction directories.
    Fuse(FuseArgs),
    /// Pixel and sample average precision of predictions.
    Eval(EvalArgs),
    /// Write one slice of a volume as an 8-bit PNG.
    ExportPng(ExportArgs),
    /// Check every checksum of a corpus.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Comma-separated axis sizes, e.g. 64,64,64 or 256,256.
    #[arg(long, value_parser = parse_shape, default_value = "64,64,64")]
    pub shape: List<usize>,
    /// Smoothing of the tissue texture, in voxels.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value = "")]
    pub group: String,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Files or directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Bilinear resize of PNG inputs to HEIGHT,WIDTH.
    #[arg(long, value_parser = parse_pair_usize)]
    pub resize: Option<(usize, usize)>,
    #[arg(long, default_value = "")]
    pub group: String,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output manifest; the input is rewritten when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.6)]
    pub train: f64,
    /// Fraction of the training share held out for validation.
    #[arg(long, default_value_t = 0.05)]
    pub val: f64,
}

#[derive(Debug, Args)]
pub struct GenTrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_parser = parse_split)]
    pub split: Option<Split>,
    /// autoseg (polygon masks) or fpi (rectangles).
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<BlendMode>,
    /// brain, abdomen or cxr.
    #[arg(long, value_parser = parse_modality)]
    pub preset: Option<Modality>,
    #[arg(long)]
    pub vertices: Option<usize>,
    #[arg(long)]
    pub num_anomalies: Option<usize>,
    #[arg(long, value_parser = parse_pair_f64)]
    pub size_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair_f64)]
    pub alpha_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair_f64)]
    pub rect_extent_range: Option<(f64, f64)>,
    /// Also export k-channel 2.5D stacks.
    #[arg(long)]
    pub stacks: bool,
    #[arg(long)]
    pub k: Option<usize>,
    /// `all` or a comma list of axial, coronal, sagittal.
    #[arg(long, value_parser = parse_axes)]
    pub axes: Option<List<ViewAxis>>,
}

#[derive(Debug, Args)]
pub struct GenTestArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_split)]
    pub split: Option<Split>,
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Sphere radius range as fractions of the smallest extent.
    #[arg(long, value_parser = parse_pair_f64)]
    pub radius_range: Option<(f64, f64)>,
    /// `all` or a comma list of corruption keys.
    #[arg(long, value_parser = parse_kinds)]
    pub kinds: Option<List<CorruptionKind>>,
    #[arg(long)]
    pub blur_sigma: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long, value_parser = parse_pair_f64)]
    pub uniform_delta_range: Option<(f64, f64)>,
    #[arg(long)]
    pub shift_fraction: Option<f64>,
    #[arg(long)]
    pub deform_strength: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub detector: Option<config::Detector>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_axes)]
    pub axes: Option<List<ViewAxis>>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// max, mean or top_q:<q>.
    #[arg(long)]
    pub reducer: Option<String>,
    /// Also write the rows as JSON lines here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON lines instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Dataset label in the report; defaults to the corpus directory name.
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// A raw (.f32), NIfTI or PNG volume.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_axis, default_value = "axial")]
    pub axis: ViewAxis,
    /// Plane index; the middle plane when omitted.
    #[arg(long)]
    pub index: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub corpus: PathBuf,
}

/// Comma-separated flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

fn parse_list<T>(s: &str, one: impl Fn(&str) -> Result<T, String>) -> Result<List<T>, String> {
    s.split(',').map(|p| one(p.trim())).collect::<Result<_, _>>().map(List)
}

fn parse_shape(s: &str) -> Result<List<usize>, String> {
    parse_list(s, |p| p.parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected two comma-separated values, got {s:?}"));
    };
    let p = |x: &str| x.parse::<T>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_pair_f64(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s)
}

fn parse_pair_usize(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s)
}

fn parse_axis(s: &str) -> Result<ViewAxis, String> {
    s.parse().map_err(|e: autoseg_core::Error| e.to_string())
}

fn parse_axes(s: &str) -> Result<List<ViewAxis>, String> {
    if s == "all" {
        Ok(List(ViewAxis::ALL.to_vec()))
    } else {
        parse_list(s, parse_axis)
    }
}

fn parse_kinds(s: &str) -> Result<List<CorruptionKind>, String> {
    if s == "all" {
        Ok(List(CorruptionKind::ALL.to_vec()))
    } else {
        parse_list(s, |p| p.parse().map_err(|e: autoseg_core::Error| e.to_string()))
    }
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse().map_err(|e: autoseg_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<BlendMode, String> {
    s.parse().map_err(|e: autoseg_core::Error| e.to_string())
}

fn parse_modality(s: &str) -> Result<Modality, String> {
    s.parse().map_err(|e: autoseg_core::Error| e.to_string())
}

pub fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => "error",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn set_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // A pool that already exists (tests calling `run` repeatedly) is kept.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
    Ok(())
}

fn stdout_line(line: &str) -> CliResult<()> {
    writeln!(std::io::stdout(), "{line}").map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn override_opt<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    set_threads(cli.threads)?;
    let mut cfg = Config::load(cli.config.as_deref())?;
    let seed = cfg.resolve_seed(cli.seed)?;
    match cli.command {
        Command::Synth(a) => {
            let m = data::synth(&a.out, a.count, &a.shape.0, a.sigma, seed, &a.group)?;
            stdout_line(&format!("wrote {} volumes", m.entries.len()))
        }
        Command::Import(a) => {
            let m = data::import(&a.inputs, &a.out, a.resize, &a.group)?;
            stdout_line(&format!("imported {} volumes", m.entries.len()))
        }
        Command::Split(a) => cmd_split(&a, seed),
        Command::GenTrain(a) => {
            let t = &mut cfg.train;
            override_opt(&mut t.count, a.count);
            override_opt(&mut t.split, a.split);
            override_opt(&mut t.mode, a.mode);
            override_opt(&mut t.preset, a.preset);
            override_opt(&mut t.alpha_range, a.alpha_range);
            override_opt(&mut t.rect_extent_range, a.rect_extent_range);
            override_opt(&mut t.k, a.k);
            override_opt(&mut t.axes, a.axes.map(|l| l.0));
            t.vertices = a.vertices.or(t.vertices);
            t.num_anomalies = a.num_anomalies.or(t.num_anomalies);
            t.size_range = a.size_range.or(t.size_range);
            t.stacks |= a.stacks;
            let m = generate::gen_train(&a.manifest, &a.out, t, seed)?;
            stdout_line(&format!("wrote {} training records", m.records.len()))
        }
        Command::GenTest(a) => {
            let t = &mut cfg.test;
            override_opt(&mut t.split, a.split);
            override_opt(&mut t.anomalous_fraction, a.fraction);
            override_opt(&mut t.kinds, a.kinds.map(|l| l.0));
            t.radius_range = a.radius_range.or(t.radius_range);
            let c = &mut t.corruption;
            override_opt(&mut c.blur_sigma, a.blur_sigma);
            override_opt(&mut c.noise_sigma, a.noise_sigma);
            override_opt(&mut c.uniform_delta_range, a.uniform_delta_range);
            override_opt(&mut c.shift_fraction, a.shift_fraction);
            override_opt(&mut c.deform_strength, a.deform_strength);
            let m = generate::gen_test(&a.manifest, &a.out, t, seed)?;
            let anomalous = m.records.iter().filter(|r| r.anomalous).count();
            stdout_line(&format!("wrote {} test records ({anomalous} anomalous)", m.records.len()))
        }
        Command::DetectRef(a) => {
            let d = &mut cfg.detect;
            override_opt(&mut d.detector, a.detector);
            override_opt(&mut d.sigma, a.sigma);
            override_opt(&mut d.axes, a.axes.map(|l| l.0));
            let n = detect::detect_ref(&a.corpus, &a.out, d)?;
            stdout_line(&format!("scored {n} records"))
        }
        Command::Fuse(a) => {
            let n = detect::fuse_dirs(&a.inputs, &a.out)?;
            stdout_line(&format!("fused {n} predictions"))
        }
        Command::Eval(a) => cmd_eval(&a, &cfg),
        Command::ExportPng(a) => {
            let v: Volume32 = io::read_volume(&a.input, VolumeFormat::detect(&a.input)?)?;
            let index = a.index.unwrap_or_else(|| axis_len(v.shape(), a.axis) / 2);
            export_slice(&v, a.axis, index, &a.out)?;
            Ok(())
        }
        Command::Verify(a) => {
            let m = io::read_manifest(&a.corpus)?;
            let files = verify_corpus(&a.corpus, &m)?;
            stdout_line(&format!("{} records, {files} payloads verified", m.records.len()))
        }
    }
}

fn cmd_split(a: &SplitArgs, seed: u64) -> CliResult<()> {
    let manifest = Manifest::load(&a.manifest)?;
    let split = split_manifest(&manifest, a.train, a.val, RngStream::new(seed, 0))?;
    split.save(a.out.as_deref().unwrap_or(&a.manifest))?;
    let (train, val, test) = split.split_counts();
    stdout_line(&format!("train {train}\nval {val}\ntest {test}"))
}

fn dataset_name(corpus: &Path) -> String {
    corpus
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "corpus".into())
}

fn cmd_eval(a: &EvalArgs, cfg: &Config) -> CliResult<()> {
    let reducer: Reducer = a
        .reducer
        .as_deref()
        .unwrap_or(&cfg.eval.reducer)
        .parse()
        .map_err(|e: autoseg_core::Error| CliError::Usage(e.to_string()))?;
    let dataset = a.dataset.clone().unwrap_or_else(|| dataset_name(&a.corpus));
    let rows = evaluate::evaluate(&a.corpus, &a.predictions, reducer, &dataset)?;
    if let Some(path) = &a.out {
        let mut buf = Vec::new();
        write_jsonl(&rows, &mut buf).map_err(|e| CliError::Data(e.to_string()))?;
        std::fs::write(path, buf).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    if a.json {
        write_jsonl(&rows, std::io::stdout()).map_err(|e| CliError::Data(format!("stdout: {e}")))
    } else {
        let mut out = std::io::stdout();
        write!(out, "{}", format_kind_table(&rows)).map_err(|e| CliError::Data(format!("stdout: {e}")))
    }
}
