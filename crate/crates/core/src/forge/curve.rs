use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Planar point in continuous pixel coordinates: `x` runs along columns
/// (last axis), `y` along rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned bounds of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<T> {
    pub min: Point2<T>,
    pub max: Point2<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }

    pub fn long_side(&self) -> T {
        self.width().max(self.height())
    }

    pub fn center(&self) -> Point2<T> {
        let two = T::one() + T::one();
        Point2::new((self.min.x + self.max.x) / two, (self.min.y + self.max.y) / two)
    }
}

/// Closed loop of points; the last point connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedCurve<T> {
    points: Vec<Point2<T>>,
}

impl<T: Scalar> ClosedCurve<T> {
    pub fn new(points: Vec<Point2<T>>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateCurve(format!(
                "a closed curve needs at least 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::DegenerateCurve("non-finite point".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Edges as `(from, to)` pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2<T>, Point2<T>)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn bounds(&self) -> Bounds<T> {
        let first = self.points[0];
        let (min, max) = self.points.iter().fold((first, first), |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        });
        Bounds { min, max }
    }

    /// Signed shoelace area (positive for counter-clockwise loops in x-right/y-up axes).
    pub fn signed_area(&self) -> T {
        let two = T::one() + T::one();
        self.edges()
            .map(|(a, b)| a.x * b.y - b.x * a.y)
            .fold(T::zero(), |acc, v| acc + v)
            / two
    }

    /// Scales about `pivot` then translates by `shift`.
    pub fn transformed(&self, pivot: Point2<T>, scale: T, shift: Point2<T>) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| {
                    Point2::new(
                        (p.x - pivot.x) * scale + pivot.x + shift.x,
                        (p.y - pivot.y) * scale + pivot.y + shift.y,
                    )
                })
                .collect(),
        }
    }

    /// Rescales the curve about its bounding-box center so that the long side
    /// equals `extent`, then translates it fully inside `[0, width] × [0, height]`.
    pub fn fit_extent(&self, extent: T, width: T, height: T) -> Self {
        let b = self.bounds();
        let long = b.long_side();
        let scale = if long > T::zero() { extent / long } else { T::one() };
        let c = b.center();
        let scaled = self.transformed(c, scale, Point2::new(T::zero(), T::zero()));
        scaled.clamped_into(width, height)
    }

    /// Smallest translation moving the bounding box inside `[0, width] × [0, height]`.
    pub fn clamped_into(&self, width: T, height: T) -> Self {
        let b = self.bounds();
        let shift_axis = |lo: T, hi: T, limit: T| {
            if lo < T::zero() {
                -lo
            } else if hi > limit {
                (limit - hi).max(-lo)
            } else {
                T::zero()
            }
        };
        let shift = Point2::new(
            shift_axis(b.min.x, b.max.x, width),
            shift_axis(b.min.y, b.max.y, height),
        );
        self.transformed(Point2::new(T::zero(), T::zero()), T::one(), shift)
    }
}

/// True when two non-adjacent edges of the loop properly intersect.
pub fn self_intersects<T: Scalar>(curve: &ClosedCurve<T>) -> bool {
    let pts = curve.points();
    let n = pts.len();
    let orient = |a: Point2<T>, b: Point2<T>, c: Point2<T>| {
        let v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if v > T::zero() {
            1
        } else if v < T::zero() {
            -1
        } else {
            0
        }
    };
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            let (o1, o2) = (orient(a, b, c), orient(a, b, d));
            let (o3, o4) = (orient(c, d, a), orient(c, d, b));
            if o1 * o2 < 0 && o3 * o4 < 0 {
                return true;
            }
        }
    }
    false
}
