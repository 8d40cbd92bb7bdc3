use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::forge::curve::{ClosedCurve, Point2};
use crate::forge::PolygonSpec;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Relative radius range of the star construction, before scaling.
pub const RADIUS_RANGE: (f64, f64) = (0.3, 1.0);

/// Smallest polygon extent, in pixels, that can still cover a pixel center.
pub const MIN_EXTENT_PX: f64 = 2.0;

pub(crate) const MAX_ATTEMPTS: u64 = 256;

/// Draws a random simple polygon on a `(height, width)` grid.
///
/// Angles are sorted on `[0, 2π)` with radii drawn from [`RADIUS_RANGE`]
/// around a uniformly drawn center. Draws leaving an angular gap of π or more
/// are rejected, so the polygon is star-shaped around its center and therefore
/// simple. The result is scaled so its bounding-box long side equals an extent
/// drawn uniformly from `size_range · min(shape)` and then shifted inside the grid.
pub fn sample_polygon<T: Scalar>(
    stream: RngStream,
    spec: &PolygonSpec,
    shape: &[usize],
) -> Result<ClosedCurve<T>> {
    spec.validate()?;
    let &[height, width] = shape else {
        return Err(Error::InvalidParameter(format!(
            "polygons are sampled on 2D shapes, got {shape:?}"
        )));
    };
    let min_side = height.min(width) as f64;
    let (s_min, s_max) = spec.size_range;
    if s_max * min_side < MIN_EXTENT_PX {
        return Err(Error::InfeasibleRegion(format!(
            "largest polygon extent {:.2} px is below {MIN_EXTENT_PX} px on {shape:?}",
            s_max * min_side
        )));
    }
    let mut rng = stream.rng();
    for _ in 0..MAX_ATTEMPTS {
        let mut angles: Vec<f64> = (0..spec.vertices).map(|_| rng.random_range(0.0..TAU)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
        let max_gap = angles
            .windows(2)
            .map(|w| w[1] - w[0])
            .chain(std::iter::once(angles[0] + TAU - angles[angles.len() - 1]))
            .fold(0.0f64, f64::max);
        let extent = if s_min == s_max {
            s_min
        } else {
            rng.random_range(s_min..=s_max)
        } * min_side;
        let cx = rng.random_range(0.0..=width as f64);
        let cy = rng.random_range(0.0..=height as f64);
        let radii: Vec<f64> = (0..spec.vertices)
            .map(|_| rng.random_range(RADIUS_RANGE.0..=RADIUS_RANGE.1))
            .collect();
        if max_gap >= PI || angles.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let pts: Vec<Point2<T>> = angles
            .iter()
            .zip(&radii)
            .map(|(a, r)| Point2::new(T::of(cx + r * a.cos()), T::of(cy + r * a.sin())))
            .collect();
        let unit = ClosedCurve::new(pts)?;
        let b = unit.bounds();
        let scale = T::of(extent) / b.long_side();
        let centered = unit.transformed(Point2::new(T::of(cx), T::of(cy)), scale, Point2::new(T::zero(), T::zero()));
        return Ok(centered.clamped_into(T::of(width as f64), T::of(height as f64)));
    }
    Err(Error::InfeasibleRegion(format!(
        "no simple {}-gon after {MAX_ATTEMPTS} attempts",
        spec.vertices
    )))
}
