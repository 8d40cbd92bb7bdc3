//! Polygon anomaly masks.
//!
//! Masks are unions of random star-shaped polygons, optionally smoothed by a
//! closed cubic spline through their vertices and rasterized with an even-odd
//! fill. Volumes get a polygon drawn on one plane and extruded across a slab
//! along a random axis, shrinking linearly towards the slab faces.

pub mod components;
pub mod curve;
pub mod polygon;
pub mod raster;
pub mod spline;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::volume::{check_shape, pad3, voxel_count, AnomalyMask};

pub use components::count_components;
pub use curve::{Bounds, ClosedCurve, Point2};
pub use polygon::sample_polygon;
pub use raster::{fill_even_odd, rasterize};
pub use spline::{smooth_curve, PeriodicSpline};

use polygon::MAX_ATTEMPTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    CubicSpline,
}

/// Imaging modality presets bundling a polygon size range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Brain,
    Abdomen,
    Cxr,
}

impl Modality {
    /// Polygon extent range as fractions of the image size.
    pub fn size_range(self) -> (f64, f64) {
        match self {
            Modality::Brain => (0.10, 0.50),
            Modality::Abdomen => (0.20, 0.60),
            Modality::Cxr => (0.05, 0.70),
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brain" => Ok(Modality::Brain),
            "abdomen" => Ok(Modality::Abdomen),
            "cxr" => Ok(Modality::Cxr),
            other => Err(Error::InvalidParameter(format!("unknown preset {other:?}"))),
        }
    }
}

/// Controls for polygon mask generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub num_anomalies: usize,
    pub vertices: usize,
    /// Bounding-box long side as fractions of the smallest image extent.
    pub size_range: (f64, f64),
    pub smoothing: Smoothing,
    pub spline_samples_per_edge: usize,
}

impl Default for PolygonSpec {
    fn default() -> Self {
        Self::preset(Modality::Brain)
    }
}

impl PolygonSpec {
    /// Single 10-vertex spline-smoothed anomaly with the modality's size range.
    pub fn preset(modality: Modality) -> Self {
        Self {
            num_anomalies: 1,
            vertices: 10,
            size_range: modality.size_range(),
            smoothing: Smoothing::CubicSpline,
            spline_samples_per_edge: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.size_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "size range ({lo}, {hi}) must satisfy 0 < min <= max <= 1"
            )));
        }
        if self.vertices < 3 {
            return Err(Error::InvalidParameter(format!(
                "polygons need at least 3 vertices, got {}",
                self.vertices
            )));
        }
        if self.spline_samples_per_edge == 0 {
            return Err(Error::InvalidParameter("spline_samples_per_edge must be positive".into()));
        }
        Ok(())
    }
}

/// Applies the configured smoothing, keeping the polygon's bounding-box long side.
fn shape_curve<T: Scalar>(
    curve: ClosedCurve<T>,
    spec: &PolygonSpec,
    height: usize,
    width: usize,
) -> Result<ClosedCurve<T>> {
    match spec.smoothing {
        Smoothing::None => Ok(curve),
        Smoothing::CubicSpline => {
            let long = curve.bounds().long_side();
            let smooth = smooth_curve(&curve, spec.spline_samples_per_edge)?;
            Ok(smooth.fit_extent(long, T::of(width as f64), T::of(height as f64)))
        }
    }
}

fn single_polygon_2d<T: Scalar>(
    stream: RngStream,
    spec: &PolygonSpec,
    height: usize,
    width: usize,
) -> Result<Vec<bool>> {
    let mut support = vec![false; height * width];
    for attempt in 0..MAX_ATTEMPTS {
        let curve = sample_polygon::<T>(stream.child(attempt), spec, &[height, width])?;
        let curve = shape_curve(curve, spec, height, width)?;
        support.fill(false);
        let filled = fill_even_odd(&curve, height, width, &mut support);
        if filled > 0 && count_components(&support, [1, height, width]) == 1 {
            return Ok(support);
        }
    }
    Err(Error::InfeasibleRegion(format!(
        "no connected polygon raster after {MAX_ATTEMPTS} attempts on ({height}, {width})"
    )))
}

fn single_polygon_3d<T: Scalar>(stream: RngStream, spec: &PolygonSpec, dims: [usize; 3]) -> Result<Vec<bool>> {
    let min_side = *dims.iter().min().expect("three axes") as f64;
    let (s_min, s_max) = spec.size_range;
    let mut rng = stream.fork(0xE7).rng();
    let mut support = vec![false; voxel_count(&dims)];
    for attempt in 0..MAX_ATTEMPTS {
        let axis = rng.random_range(0..3usize);
        let frac = if s_min == s_max {
            s_min
        } else {
            rng.random_range(s_min..=s_max)
        };
        let thickness = (frac * min_side).max(1.0);
        let len = dims[axis] as f64;
        let slab_center = if thickness >= len {
            len / 2.0
        } else {
            rng.random_range(thickness / 2.0..=len - thickness / 2.0)
        };
        let plane_axes: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        let (ph, pw) = (dims[plane_axes[0]], dims[plane_axes[1]]);

        let curve = sample_polygon::<T>(stream.child(attempt), spec, &[ph, pw])?;
        let curve = shape_curve(curve, spec, ph, pw)?;
        let pivot = curve.bounds().center();
        let half = thickness / 2.0;

        support.fill(false);
        let mut plane = vec![false; ph * pw];
        let mut filled = 0;
        for s in 0..dims[axis] {
            let d = (s as f64 + 0.5 - slab_center).abs();
            if d > half {
                continue;
            }
            let scale = T::of(1.0 - 0.5 * d / half);
            let slice = curve.transformed(pivot, scale, Point2::new(T::zero(), T::zero()));
            plane.fill(false);
            if fill_even_odd(&slice, ph, pw, &mut plane) == 0 {
                continue;
            }
            for r in 0..ph {
                for c in 0..pw {
                    if plane[r * pw + c] {
                        let mut idx = [0usize; 3];
                        idx[axis] = s;
                        idx[plane_axes[0]] = r;
                        idx[plane_axes[1]] = c;
                        support[(idx[0] * dims[1] + idx[1]) * dims[2] + idx[2]] = true;
                        filled += 1;
                    }
                }
            }
        }
        if filled > 0 && count_components(&support, dims) == 1 {
            return Ok(support);
        }
    }
    Err(Error::InfeasibleRegion(format!(
        "no connected extruded polygon after {MAX_ATTEMPTS} attempts on {dims:?}"
    )))
}

/// Union of `spec.num_anomalies` independently drawn polygon anomalies.
///
/// Each anomaly is a single face-connected blob; overlapping anomalies merge.
/// 2D shapes are `(rows, cols)`; 3D shapes extrude a planar polygon.
pub fn generate_mask<T: Scalar>(stream: RngStream, spec: &PolygonSpec, shape: &[usize]) -> Result<AnomalyMask<T>> {
    spec.validate()?;
    check_shape(shape)?;
    let mut support = vec![false; voxel_count(shape)];
    for a in 0..spec.num_anomalies {
        let s = stream.fork(a as u64 + 1);
        let one = match *shape {
            [h, w] => single_polygon_2d::<T>(s, spec, h, w)?,
            _ => single_polygon_3d::<T>(s, spec, pad3(shape))?,
        };
        support.iter_mut().zip(one).for_each(|(dst, v)| *dst |= v);
    }
    AnomalyMask::from_support(shape, &support)
}
