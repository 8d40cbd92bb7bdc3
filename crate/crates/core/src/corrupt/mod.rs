//! Held-out test corruptions applied inside a random sphere.
//!
//! Every corruption rewrites only the voxels of the sphere; everything outside
//! is copied bit-for-bit.

pub mod filter;
pub mod warp;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blend::{AnomalyKind, AnomalyRecipe, RegionRecord};
use crate::error::{Error, Result};
use crate::region::{sample_sphere, sphere_indicator, SphereRegion};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::volume::{axis_offset, AnomalyMask, Volume};

pub use filter::{blur_box, gaussian_blur, Box3, GaussianKernel};
pub use warp::{radial_displacement, sample_linear, Radial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    LocalBlur,
    SliceShuffle,
    NoiseAddition,
    Reflection,
    SinkDeformation,
    SourceDeformation,
    UniformAddition,
    UniformShift,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 8] = [
        CorruptionKind::LocalBlur,
        CorruptionKind::SliceShuffle,
        CorruptionKind::NoiseAddition,
        CorruptionKind::Reflection,
        CorruptionKind::SinkDeformation,
        CorruptionKind::SourceDeformation,
        CorruptionKind::UniformAddition,
        CorruptionKind::UniformShift,
    ];

    /// Identifier used on the command line and in reports.
    pub fn key(self) -> &'static str {
        match self {
            CorruptionKind::LocalBlur => "local_blur",
            CorruptionKind::SliceShuffle => "slice_shuffle",
            CorruptionKind::NoiseAddition => "noise_addition",
            CorruptionKind::Reflection => "reflection",
            CorruptionKind::SinkDeformation => "sink_deformation",
            CorruptionKind::SourceDeformation => "source_deformation",
            CorruptionKind::UniformAddition => "uniform_addition",
            CorruptionKind::UniformShift => "uniform_shift",
        }
    }

    /// Human-readable row label.
    pub fn label(self) -> &'static str {
        match self {
            CorruptionKind::LocalBlur => "Local Blur",
            CorruptionKind::SliceShuffle => "Slice Shuffle",
            CorruptionKind::NoiseAddition => "Noise Addition",
            CorruptionKind::Reflection => "Reflection",
            CorruptionKind::SinkDeformation => "Sink Deformation",
            CorruptionKind::SourceDeformation => "Source Deformation",
            CorruptionKind::UniformAddition => "Uniform Addition",
            CorruptionKind::UniformShift => "Uniform Shift",
        }
    }
}

impl std::fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

impl std::str::FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown corruption kind {s:?}")))
    }
}

/// Corruption magnitudes, on intensities normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptionParams {
    /// Gaussian sigma of the local blur, in voxels.
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    /// Magnitude range of the uniform addition; the sign is drawn separately.
    pub uniform_delta_range: (f64, f64),
    /// Translation of the uniform shift as a fraction of the sphere radius.
    pub shift_fraction: f64,
    /// Strength of the sink/source warps, in `(0, 1)`.
    pub deform_strength: f64,
    /// Shuffle slices with a random permutation instead of independent draws.
    pub shuffle_permutation: bool,
}

impl Default for CorruptionParams {
    fn default() -> Self {
        Self {
            blur_sigma: 4.0,
            noise_sigma: 0.1,
            uniform_delta_range: (0.1, 0.4),
            shift_fraction: 0.5,
            deform_strength: 0.5,
            shuffle_permutation: false,
        }
    }
}

impl CorruptionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v} is out of range")));
        if !(self.blur_sigma > 0.0) {
            return bad("blur_sigma", self.blur_sigma);
        }
        if !(self.noise_sigma > 0.0) {
            return bad("noise_sigma", self.noise_sigma);
        }
        let (lo, hi) = self.uniform_delta_range;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "uniform_delta_range ({lo}, {hi}) must satisfy 0 <= lo <= hi"
            )));
        }
        if !(self.shift_fraction >= 0.0) {
            return bad("shift_fraction", self.shift_fraction);
        }
        if !(self.deform_strength > 0.0 && self.deform_strength < 1.0) {
            return bad("deform_strength", self.deform_strength);
        }
        Ok(())
    }
}

#[inline]
fn clip01<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

#[inline]
fn offset3(dims: [usize; 3], idx: [usize; 3]) -> usize {
    (idx[0] * dims[1] + idx[1]) * dims[2] + idx[2]
}

fn random_axis(rng: &mut impl Rng, ndim: usize) -> usize {
    axis_offset(ndim) + rng.random_range(0..ndim)
}

/// Applies one corruption inside `region`. Returns the corrupted volume and the
/// sphere's indicator mask.
pub fn apply<T: Scalar>(
    kind: CorruptionKind,
    stream: RngStream,
    volume: &Volume<T>,
    region: &SphereRegion,
    params: &CorruptionParams,
) -> Result<(Volume<T>, AnomalyMask<T>)> {
    params.validate()?;
    region.check_within(volume.shape())?;
    let shape = volume.shape();
    let dims = volume.dims3();
    let Some(bx) = region.voxel_box(shape) else {
        return Err(Error::EmptyRegion);
    };
    let mut inside = Vec::new();
    region.for_each_voxel(shape, |off, idx| inside.push((off, idx)));
    if inside.is_empty() {
        return Err(Error::EmptyRegion);
    }

    let src = volume.data();
    let mut out = src.to_vec();
    let mut rng = stream.rng();
    match kind {
        CorruptionKind::LocalBlur => {
            let target = Box3 {
                lo: bx.lo,
                hi: [bx.hi[0] + 1, bx.hi[1] + 1, bx.hi[2] + 1],
            };
            let blurred = blur_box(volume, params.blur_sigma, target)?;
            let bd = [bx.extent(0), bx.extent(1), bx.extent(2)];
            for &(off, idx) in &inside {
                let local = [idx[0] - bx.lo[0], idx[1] - bx.lo[1], idx[2] - bx.lo[2]];
                out[off] = blurred[offset3(bd, local)];
            }
        }
        CorruptionKind::SliceShuffle => {
            let axis = random_axis(&mut rng, volume.ndim());
            let (first, count) = (bx.lo[axis], bx.extent(axis));
            let mapping: Vec<usize> = if count == 1 {
                vec![first]
            } else if params.shuffle_permutation {
                let mut perm: Vec<usize> = (first..first + count).collect();
                perm.shuffle(&mut rng);
                perm
            } else {
                (0..count)
                    .map(|i| {
                        let j = rng.random_range(0..count - 1);
                        first + if j >= i { j + 1 } else { j }
                    })
                    .collect()
            };
            for &(off, idx) in &inside {
                let mut from = idx;
                from[axis] = mapping[idx[axis] - first];
                out[off] = src[offset3(dims, from)];
            }
        }
        CorruptionKind::NoiseAddition => {
            let normal = Normal::new(0.0, params.noise_sigma)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for &(off, _) in &inside {
                out[off] = clip01(src[off] + T::of(normal.sample(&mut rng)));
            }
        }
        CorruptionKind::Reflection => {
            let axis = random_axis(&mut rng, volume.ndim());
            let c = region.center3()[axis];
            let n = dims[axis] as f64;
            for &(off, idx) in &inside {
                let mirrored = 2.0 * c - (idx[axis] as f64 + 0.5);
                let mut from = idx;
                from[axis] = mirrored.floor().clamp(0.0, n - 1.0) as usize;
                out[off] = src[offset3(dims, from)];
            }
        }
        CorruptionKind::SinkDeformation | CorruptionKind::SourceDeformation => {
            let dir = if kind == CorruptionKind::SinkDeformation {
                Radial::Sink
            } else {
                Radial::Source
            };
            for &(off, idx) in &inside {
                let p = [idx[0] as f64 + 0.5, idx[1] as f64 + 0.5, idx[2] as f64 + 0.5];
                let d = radial_displacement(region, params.deform_strength, dir, p);
                out[off] = sample_linear(src, dims, [p[0] + d[0], p[1] + d[1], p[2] + d[2]]);
            }
        }
        CorruptionKind::UniformAddition => {
            let (lo, hi) = params.uniform_delta_range;
            let magnitude = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            let delta = if rng.random_bool(0.5) { magnitude } else { -magnitude };
            let delta = T::of(delta);
            for &(off, _) in &inside {
                out[off] = clip01(src[off] + delta);
            }
        }
        CorruptionKind::UniformShift => {
            let off_axis = axis_offset(volume.ndim());
            let mut dir = [0.0f64; 3];
            loop {
                for d in dir.iter_mut().skip(off_axis) {
                    *d = StandardNormal.sample(&mut rng);
                }
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    dir.iter_mut().for_each(|v| *v /= norm);
                    break;
                }
            }
            let len = params.shift_fraction * region.radius;
            for &(off, idx) in &inside {
                let mut from = idx;
                for a in off_axis..3 {
                    let p = idx[a] as f64 + 0.5 + len * dir[a];
                    from[a] = p.floor().clamp(0.0, dims[a] as f64 - 1.0) as usize;
                }
                out[off] = src[offset3(dims, from)];
            }
        }
    }
    let mask = sphere_indicator(region, shape)?;
    Ok((volume.with_data(out)?, mask))
}

/// Assignment of corruption kinds to the volumes of a test set: `None` means
/// the volume stays clean.
///
/// `round(fraction · n)` volumes (ties to even) chosen by a seeded shuffle get
/// a kind drawn uniformly from `kinds`.
pub fn plan_test_set(
    stream: RngStream,
    n: usize,
    anomalous_fraction: f64,
    kinds: &[CorruptionKind],
) -> Result<Vec<Option<CorruptionKind>>> {
    if n == 0 {
        return Err(Error::InvalidParameter("test set needs at least one volume".into()));
    }
    if !(0.0..=1.0).contains(&anomalous_fraction) {
        return Err(Error::InvalidParameter(format!(
            "anomalous fraction {anomalous_fraction} outside [0, 1]"
        )));
    }
    if kinds.is_empty() {
        return Err(Error::InvalidParameter("no corruption kinds selected".into()));
    }
    let count = (anomalous_fraction * n as f64).round_ties_even() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.fork(1).rng());
    let mut plan = vec![None; n];
    for &i in &order[..count] {
        let k = stream.child(i as u64).fork(1).rng().random_range(0..kinds.len());
        plan[i] = Some(kinds[k]);
    }
    Ok(plan)
}

/// One volume of a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase<T> {
    pub volume: Volume<T>,
    pub mask: AnomalyMask<T>,
    pub kind: Option<CorruptionKind>,
    pub recipe: Option<AnomalyRecipe>,
}

/// Corrupts (or passes through) the `index`-th volume of a test set.
pub fn make_test_case<T: Scalar>(
    stream: RngStream,
    index: usize,
    volume: &Volume<T>,
    kind: Option<CorruptionKind>,
    params: &CorruptionParams,
    radius_range: (f64, f64),
) -> Result<TestCase<T>> {
    let Some(kind) = kind else {
        return Ok(TestCase {
            volume: volume.clone(),
            mask: AnomalyMask::zeros(volume.shape())?,
            kind: None,
            recipe: None,
        });
    };
    let item = stream.child(index as u64);
    let region = sample_sphere(item.fork(2), volume.shape(), radius_range)?;
    let corruption_stream = item.fork(3);
    let (corrupted, mask) = apply(kind, corruption_stream, volume, &region, params)?;
    let recipe = AnomalyRecipe {
        kind: AnomalyKind::Corruption(kind),
        source_id: volume.id().to_string(),
        donor_id: None,
        alpha: None,
        mask_seed: corruption_stream.seed,
        stream_id: corruption_stream.stream_id,
        region: RegionRecord::Sphere(region),
    };
    Ok(TestCase {
        volume: corrupted,
        mask,
        kind: Some(kind),
        recipe: Some(recipe),
    })
}

/// Re-applies a recorded corruption.
pub fn replay_corruption<T: Scalar>(
    recipe: &AnomalyRecipe,
    volume: &Volume<T>,
    params: &CorruptionParams,
) -> Result<(Volume<T>, AnomalyMask<T>)> {
    match (&recipe.kind, &recipe.region) {
        (AnomalyKind::Corruption(kind), RegionRecord::Sphere(region)) => {
            apply(*kind, recipe.mask_stream(), volume, region, params)
        }
        _ => Err(Error::InvalidParameter("recipe does not describe a sphere corruption".into())),
    }
}

/// Builds a test set: a planned fraction of the volumes is corrupted inside a
/// random sphere, the rest pass through with empty masks.
pub fn make_test_set<T: Scalar>(
    stream: RngStream,
    volumes: &[Volume<T>],
    anomalous_fraction: f64,
    params: &CorruptionParams,
    radius_range: (f64, f64),
    kinds: &[CorruptionKind],
) -> Result<Vec<TestCase<T>>> {
    params.validate()?;
    let plan = plan_test_set(stream, volumes.len(), anomalous_fraction, kinds)?;
    volumes
        .par_iter()
        .zip(plan)
        .enumerate()
        .map(|(i, (v, kind))| make_test_case(stream, i, v, kind, params, radius_range))
        .collect()
}
