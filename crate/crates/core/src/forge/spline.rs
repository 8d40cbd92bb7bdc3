//! Periodic cubic spline through the vertices of a closed polygon.
//!
//! Knots are parameterized by cumulative chord length. Each coordinate is an
//! independent C² periodic spline; the second-derivative system is cyclic
//! tridiagonal and solved with the Sherman–Morrison correction.

use crate::error::{Error, Result};
use crate::forge::curve::{ClosedCurve, Point2};
use crate::scalar::Scalar;

/// Solves `A x = rhs` for a cyclic tridiagonal `A` with `sub[i] = A[i][i-1]`,
/// `diag[i] = A[i][i]`, `sup[i] = A[i][i+1]` (indices modulo n).
fn solve_cyclic<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    debug_assert!(n >= 3);
    let alpha = sup[n - 1]; // A[n-1][0]
    let beta = sub[0]; // A[0][n-1]
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;

    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (T::one() + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect()
}

/// Thomas algorithm; ignores `sub[0]` and `sup[n-1]`.
fn solve_tridiagonal<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { T::zero() };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Closed C² cubic spline through a loop of knots.
#[derive(Debug, Clone)]
pub struct PeriodicSpline<T> {
    knots: Vec<Point2<T>>,
    /// Parameter length of segment `i` (knot `i` to knot `i + 1`).
    spans: Vec<T>,
    /// Second derivatives at the knots, per coordinate.
    mx: Vec<T>,
    my: Vec<T>,
}

impl<T: Scalar> PeriodicSpline<T> {
    pub fn through(curve: &ClosedCurve<T>) -> Result<Self> {
        let knots = curve.points().to_vec();
        let n = knots.len();
        let spans: Vec<T> = curve.edges().map(|(a, b)| a.dist(b)).collect();
        if let Some(i) = spans.iter().position(|&h| !(h > T::zero())) {
            return Err(Error::DegenerateCurve(format!(
                "vertices {} and {} coincide",
                i,
                (i + 1) % n
            )));
        }
        let two = T::one() + T::one();
        let six = T::of(6.0);
        let prev = |i: usize| (i + n - 1) % n;
        let sub: Vec<T> = (0..n).map(|i| spans[prev(i)]).collect();
        let sup: Vec<T> = spans.clone();
        let diag: Vec<T> = (0..n).map(|i| two * (spans[prev(i)] + spans[i])).collect();
        let rhs = |coord: fn(&Point2<T>) -> T| -> Vec<T> {
            (0..n)
                .map(|i| {
                    let (p, c, nx) = (&knots[prev(i)], &knots[i], &knots[(i + 1) % n]);
                    six * ((coord(nx) - coord(c)) / spans[i] - (coord(c) - coord(p)) / spans[prev(i)])
                })
                .collect()
        };
        let mx = solve_cyclic(&sub, &diag, &sup, &rhs(|p| p.x));
        let my = solve_cyclic(&sub, &diag, &sup, &rhs(|p| p.y));
        Ok(Self {
            knots,
            spans,
            mx,
            my,
        })
    }

    /// Point on segment `seg` at local parameter `s ∈ [0, span]`.
    pub fn eval(&self, seg: usize, s: T) -> Point2<T> {
        let n = self.knots.len();
        let j = (seg + 1) % n;
        let h = self.spans[seg];
        let six = T::of(6.0);
        let a = h - s;
        let b = s;
        let f = |y0: T, y1: T, m0: T, m1: T| {
            m0 * a * a * a / (six * h)
                + m1 * b * b * b / (six * h)
                + (y0 / h - m0 * h / six) * a
                + (y1 / h - m1 * h / six) * b
        };
        Point2::new(
            f(self.knots[seg].x, self.knots[j].x, self.mx[seg], self.mx[j]),
            f(self.knots[seg].y, self.knots[j].y, self.my[seg], self.my[j]),
        )
    }

    pub fn span(&self, seg: usize) -> T {
        self.spans[seg]
    }

    pub fn segments(&self) -> usize {
        self.knots.len()
    }
}

/// Resamples the closed spline through `curve`'s vertices with
/// `samples_per_edge` points per segment, starting at each knot.
pub fn smooth_curve<T: Scalar>(curve: &ClosedCurve<T>, samples_per_edge: usize) -> Result<ClosedCurve<T>> {
    if samples_per_edge == 0 {
        return Err(Error::InvalidParameter("samples_per_edge must be positive".into()));
    }
    let spline = PeriodicSpline::through(curve)?;
    let mut out = Vec::with_capacity(curve.len() * samples_per_edge);
    for seg in 0..spline.segments() {
        out.push(curve.points()[seg]);
        let h = spline.span(seg);
        for k in 1..samples_per_edge {
            let s = h * T::of(k as f64) / T::of(samples_per_edge as f64);
            out.push(spline.eval(seg, s));
        }
    }
    ClosedCurve::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(pts: &[(f64, f64)]) -> ClosedCurve<f64> {
        ClosedCurve::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn one_sample_per_edge_returns_knots() {
        let c = poly(&[(0.0, 0.0), (3.0, 0.5), (2.0, 4.0), (-1.0, 2.0)]);
        assert_eq!(smooth_curve(&c, 1).unwrap(), c);
    }

    #[test]
    fn output_count() {
        let c = poly(&[(0.0, 0.0), (3.0, 0.5), (2.0, 4.0), (-1.0, 2.0), (-2.0, 1.0)]);
        assert_eq!(smooth_curve(&c, 7).unwrap().len(), 35);
    }

    #[test]
    fn square_stays_in_circumcircle() {
        let c = poly(&[(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]);
        let s = smooth_curve(&c, 200).unwrap();
        let r_max = s
            .points()
            .iter()
            .map(|p| p.x.hypot(p.y))
            .fold(0.0f64, f64::max);
        assert!(r_max <= 2f64.sqrt() + 1e-12, "max radius {r_max}");
        // it does bulge past the edges
        assert!(s.points().iter().any(|p| p.x.abs() > 1.0));
    }

    #[test]
    fn duplicate_vertices_rejected() {
        let c = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert!(matches!(smooth_curve(&c, 4), Err(Error::DegenerateCurve(_))));
        let wrap = poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]);
        assert!(matches!(smooth_curve(&wrap, 4), Err(Error::DegenerateCurve(_))));
    }

    /// Finite-difference check that the spline is C¹ and C² across every knot.
    #[test]
    fn continuity_at_knots() {
        let c = poly(&[(0.0, 0.0), (5.0, 1.0), (6.0, 4.0), (2.0, 6.0), (-1.0, 3.0)]);
        let sp = PeriodicSpline::through(&c).unwrap();
        let n = sp.segments();
        let e = 1e-4;
        for seg in 0..n {
            let next = (seg + 1) % n;
            let h = sp.span(seg);
            let end = sp.eval(seg, h);
            let start = sp.eval(next, 0.0);
            assert!(end.dist(start) < 1e-9);
            let d_left = (sp.eval(seg, h).x - sp.eval(seg, h - e).x) / e;
            let d_right = (sp.eval(next, e).x - sp.eval(next, 0.0).x) / e;
            assert!((d_left - d_right).abs() < 1e-2, "seg {seg}: {d_left} vs {d_right}");
            let dd_left = (sp.eval(seg, h).y - 2.0 * sp.eval(seg, h - e).y + sp.eval(seg, h - 2.0 * e).y) / (e * e);
            let dd_right = (sp.eval(next, 2.0 * e).y - 2.0 * sp.eval(next, e).y + sp.eval(next, 0.0).y) / (e * e);
            assert!((dd_left - dd_right).abs() < 1e-1, "seg {seg}: {dd_left} vs {dd_right}");
        }
    }

    proptest! {
        #[test]
        fn interpolates_knots(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..12),
            m in 1usize..9,
        ) {
            let c = poly(&pts);
            prop_assume!(c.edges().all(|(a, b)| a.dist(b) > 1e-3));
            let s = smooth_curve(&c, m).unwrap();
            let sp = PeriodicSpline::through(&c).unwrap();
            for (i, p) in c.points().iter().enumerate() {
                prop_assert_eq!(s.points()[i * m], *p);
                // the segment evaluated at its far end lands on the next knot
                let end = sp.eval(i, sp.span(i));
                let next = c.points()[(i + 1) % c.len()];
                prop_assert!(end.dist(next) < 1e-6);
            }
        }

        #[test]
        fn translation_equivariant(
            pts in proptest::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 3..8),
            dx in -100.0f64..100.0,
            dy in -100.0f64..100.0,
        ) {
            let c = poly(&pts);
            prop_assume!(c.edges().all(|(a, b)| a.dist(b) > 1e-2));
            let moved = c.transformed(Point2::new(0.0, 0.0), 1.0, Point2::new(dx, dy));
            let s1 = smooth_curve(&c, 5).unwrap();
            let s2 = smooth_curve(&moved, 5).unwrap();
            for (a, b) in s1.points().iter().zip(s2.points()) {
                prop_assert!((a.x + dx - b.x).abs() < 1e-6 && (a.y + dy - b.y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let c = ClosedCurve::new(vec![
            Point2::new(0.0f32, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(2.0, 3.0),
        ])
        .unwrap();
        let s = smooth_curve(&c, 10).unwrap();
        assert_eq!(s.len(), 30);
    }
}
