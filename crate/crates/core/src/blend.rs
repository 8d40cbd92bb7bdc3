//! Foreign-texture anomalies: a masked region of the source is linearly
//! interpolated towards the same region of a donor image.
//!
//! The training target carries the interpolation factor inside the mask and
//! zero elsewhere, so one map encodes both the anomalous region and its strength.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forge::{generate_mask, PolygonSpec};
use crate::region::SphereRegion;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::volume::{check_shape, pad3, AnomalyMask, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    #[serde(alias = "autoseg")]
    AutosegPolygon,
    #[serde(alias = "fpi")]
    FpiRectangle,
}

impl BlendMode {
    pub fn key(self) -> &'static str {
        match self {
            BlendMode::AutosegPolygon => "autoseg_polygon",
            BlendMode::FpiRectangle => "fpi_rectangle",
        }
    }
}

impl std::str::FromStr for BlendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "autoseg" | "autoseg_polygon" => Ok(BlendMode::AutosegPolygon),
            "fpi" | "fpi_rectangle" => Ok(BlendMode::FpiRectangle),
            other => Err(Error::InvalidParameter(format!("unknown blend mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendSpec {
    pub alpha_range: (f64, f64),
    pub mode: BlendMode,
    /// Side-length range of rectangular masks, as fractions of each axis.
    pub rect_extent_range: (f64, f64),
}

impl Default for BlendSpec {
    fn default() -> Self {
        Self {
            alpha_range: (0.05, 0.95),
            mode: BlendMode::AutosegPolygon,
            rect_extent_range: (0.1, 0.5),
        }
    }
}

impl BlendSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.alpha_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha range ({lo}, {hi}) must satisfy 0 < lo <= hi < 1"
            )));
        }
        check_fraction_range(self.rect_extent_range, "rectangle extent")
    }
}

fn check_fraction_range((lo, hi): (f64, f64), what: &str) -> Result<()> {
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{what} range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1"
        )));
    }
    Ok(())
}

/// Axis-aligned box of voxels: `lo[a] .. lo[a] + size[a]` on every axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectRegion {
    pub lo: Vec<usize>,
    pub size: Vec<usize>,
}

impl RectRegion {
    pub fn to_mask<T: Scalar>(&self, shape: &[usize]) -> Result<AnomalyMask<T>> {
        check_shape(shape)?;
        if self.lo.len() != shape.len()
            || self.size.len() != shape.len()
            || self.lo.iter().zip(&self.size).zip(shape).any(|((&l, &s), &n)| s == 0 || l + s > n)
        {
            return Err(Error::InfeasibleRegion(format!(
                "rectangle {:?}+{:?} does not fit {:?}",
                self.lo, self.size, shape
            )));
        }
        let off = 3 - shape.len();
        let dims = pad3(shape);
        let mut lo = [0usize; 3];
        let mut hi = [1usize; 3];
        for a in 0..shape.len() {
            lo[a + off] = self.lo[a];
            hi[a + off] = self.lo[a] + self.size[a];
        }
        let mut values = vec![T::zero(); dims.iter().product()];
        for z in lo[0]..hi[0] {
            for y in lo[1]..hi[1] {
                let row = (z * dims[1] + y) * dims[2];
                values[row + lo[2]..row + hi[2]].fill(T::one());
            }
        }
        AnomalyMask::new(shape.to_vec(), values)
    }
}

/// Draws an axis-aligned box fully inside the grid with each side uniform in
/// `extent_range · axis size` (rounded, at least one voxel).
pub fn sample_rect_region(stream: RngStream, shape: &[usize], extent_range: (f64, f64)) -> Result<RectRegion> {
    check_shape(shape)?;
    check_fraction_range(extent_range, "rectangle extent")?;
    let (lo, hi) = extent_range;
    let mut rng = stream.rng();
    let mut region = RectRegion {
        lo: Vec::with_capacity(shape.len()),
        size: Vec::with_capacity(shape.len()),
    };
    for &n in shape {
        let frac = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        let side = ((frac * n as f64).round() as usize).clamp(1, n);
        let start = rng.random_range(0..=n - side);
        region.lo.push(start);
        region.size.push(side);
    }
    Ok(region)
}

/// Rectangular binary mask; see [`sample_rect_region`].
pub fn sample_rectangle<T: Scalar>(
    stream: RngStream,
    shape: &[usize],
    extent_range: (f64, f64),
) -> Result<AnomalyMask<T>> {
    sample_rect_region(stream, shape, extent_range)?.to_mask(shape)
}

/// `(1 − α)·source + α·donor` on the mask support, `source` elsewhere.
pub fn interpolate_patch<T: Scalar>(
    source: &Volume<T>,
    donor: &Volume<T>,
    mask: &AnomalyMask<T>,
    alpha: T,
) -> Result<Volume<T>> {
    for other in [donor.shape(), mask.shape()] {
        if other != source.shape() {
            return Err(Error::ShapeMismatch {
                expected: source.shape().to_vec(),
                actual: other.to_vec(),
            });
        }
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidParameter(format!("alpha {alpha:?} outside (0, 1)")));
    }
    if !mask.is_binary() {
        return Err(Error::InvalidParameter("interpolation mask must be binary".into()));
    }
    let keep = T::one() - alpha;
    let data = source
        .data()
        .iter()
        .zip(donor.data())
        .zip(mask.values())
        .map(|((&s, &d), &m)| if m > T::zero() { keep * s + alpha * d } else { s })
        .collect();
    source.with_data(data)
}

/// What kind of anomaly a recipe describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnomalyKind {
    Blend(BlendMode),
    Corruption(crate::corrupt::CorruptionKind),
}

/// Geometry of an anomaly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegionRecord {
    Polygon { spec: PolygonSpec },
    Rectangle(RectRegion),
    Sphere(SphereRegion),
}

/// Provenance of one generated anomaly; enough to regenerate it bit-exactly
/// from the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecipe {
    pub kind: AnomalyKind,
    pub source_id: String,
    pub donor_id: Option<String>,
    pub alpha: Option<f64>,
    /// Key of the random stream the mask (or corruption) was drawn from.
    pub mask_seed: u64,
    pub stream_id: u64,
    pub region: RegionRecord,
}

impl AnomalyRecipe {
    pub fn mask_stream(&self) -> RngStream {
        RngStream::new(self.mask_seed, self.stream_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample<T> {
    pub image: Volume<T>,
    pub target: AnomalyMask<T>,
    pub recipe: AnomalyRecipe,
}

fn check_pair<T: Scalar>(source: &Volume<T>, donor: &Volume<T>) -> Result<()> {
    if source.shape() != donor.shape() {
        return Err(Error::ShapeMismatch {
            expected: source.shape().to_vec(),
            actual: donor.shape().to_vec(),
        });
    }
    for v in [source, donor] {
        let (lo, hi) = v.intensity_range();
        if lo < T::zero() || hi > T::one() {
            return Err(Error::InvalidParameter(format!(
                "volume {} is not normalized to [0, 1]",
                v.id()
            )));
        }
    }
    Ok(())
}

fn assemble<T: Scalar>(
    source: &Volume<T>,
    donor: &Volume<T>,
    mask: AnomalyMask<T>,
    alpha: f64,
    recipe: AnomalyRecipe,
) -> Result<TrainingSample<T>> {
    let a = T::of(alpha);
    let image = interpolate_patch(source, donor, &mask, a)?;
    let target = mask.with_level(a)?;
    Ok(TrainingSample { image, target, recipe })
}

/// One self-supervised training sample: a mask (polygon or rectangle), an
/// interpolation factor drawn uniformly from the alpha range, the blended
/// image and the alpha-valued target.
pub fn make_training_sample<T: Scalar>(
    stream: RngStream,
    source: &Volume<T>,
    donor: &Volume<T>,
    spec: &BlendSpec,
    poly: &PolygonSpec,
) -> Result<TrainingSample<T>> {
    spec.validate()?;
    check_pair(source, donor)?;
    let mask_stream = stream.fork(1);
    let (lo, hi) = spec.alpha_range;
    let alpha = if lo == hi {
        lo
    } else {
        stream.fork(2).rng().random_range(lo..=hi)
    };
    let (mask, region) = match spec.mode {
        BlendMode::AutosegPolygon => (
            generate_mask(mask_stream, poly, source.shape())?,
            RegionRecord::Polygon { spec: poly.clone() },
        ),
        BlendMode::FpiRectangle => {
            let rect = sample_rect_region(mask_stream, source.shape(), spec.rect_extent_range)?;
            (rect.to_mask(source.shape())?, RegionRecord::Rectangle(rect))
        }
    };
    let recipe = AnomalyRecipe {
        kind: AnomalyKind::Blend(spec.mode),
        source_id: source.id().to_string(),
        donor_id: Some(donor.id().to_string()),
        alpha: Some(alpha),
        mask_seed: mask_stream.seed,
        stream_id: mask_stream.stream_id,
        region,
    };
    assemble(source, donor, mask, alpha, recipe)
}

/// Regenerates a training sample from its recipe.
pub fn replay<T: Scalar>(recipe: &AnomalyRecipe, source: &Volume<T>, donor: &Volume<T>) -> Result<TrainingSample<T>> {
    check_pair(source, donor)?;
    let alpha = recipe
        .alpha
        .ok_or_else(|| Error::InvalidParameter("recipe has no alpha".into()))?;
    let mask = match &recipe.region {
        RegionRecord::Polygon { spec } => generate_mask(recipe.mask_stream(), spec, source.shape())?,
        RegionRecord::Rectangle(rect) => rect.to_mask(source.shape())?,
        RegionRecord::Sphere(_) => {
            return Err(Error::InvalidParameter("sphere recipes describe test corruptions".into()))
        }
    };
    assemble(source, donor, mask, alpha, recipe.clone())
}

/// Picks a (source, donor) pair of distinct indices among `n` volumes.
pub fn choose_pair(stream: RngStream, n: usize) -> Result<(usize, usize)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "foreign-patch blending needs at least 2 volumes, got {n}"
        )));
    }
    let mut rng = stream.fork(3).rng();
    let source = rng.random_range(0..n);
    let mut donor = rng.random_range(0..n - 1);
    if donor >= source {
        donor += 1;
    }
    Ok((source, donor))
}
