//! Even-odd scanline fill of closed curves.
//!
//! Pixel `(row, col)` is sampled at its center `(col + 0.5, row + 0.5)`. A
//! horizontal edge crossing is counted with the half-open rule
//! `(y_i > y) != (y_j > y)`, so every pixel center gets an unambiguous parity.

use crate::error::{Error, Result};
use crate::forge::curve::ClosedCurve;
use crate::scalar::Scalar;
use crate::volume::AnomalyMask;

/// Fills `out` (row-major, `height × width`) with the even-odd interior of `curve`.
/// Returns the number of pixels set.
pub fn fill_even_odd<T: Scalar>(curve: &ClosedCurve<T>, height: usize, width: usize, out: &mut [bool]) -> usize {
    debug_assert_eq!(out.len(), height * width);
    let pts = curve.points();
    let n = pts.len();
    let b = curve.bounds();
    let half = T::of(0.5);
    // rows whose centers can lie strictly between min.y and max.y
    let row_lo = (b.min.y.wide() - 0.5).floor().max(0.0) as usize;
    let row_hi = ((b.max.y.wide() + 0.5).ceil().max(0.0) as usize).min(height);
    let mut xs: Vec<T> = Vec::with_capacity(n);
    let mut filled = 0;
    for row in row_lo..row_hi {
        let y = T::of(row as f64) + half;
        xs.clear();
        for i in 0..n {
            let j = if i == 0 { n - 1 } else { i - 1 };
            let (pi, pj) = (pts[i], pts[j]);
            if (pi.y > y) != (pj.y > y) {
                xs.push((pj.x - pi.x) * (y - pi.y) / (pj.y - pi.y) + pi.x);
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
        let line = &mut out[row * width..(row + 1) * width];
        for pair in xs.chunks_exact(2) {
            let (x0, x1) = (pair[0], pair[1]);
            // first column whose center is >= x0
            let mut c = (x0.wide() - 1.5).floor().max(0.0) as usize;
            while c < width && T::of(c as f64) + half < x0 {
                c += 1;
            }
            while c < width && T::of(c as f64) + half < x1 {
                if !line[c] {
                    line[c] = true;
                    filled += 1;
                }
                c += 1;
            }
        }
    }
    filled
}

/// Binary mask of the pixel centers inside `curve` on a `(height, width)` grid.
pub fn rasterize<T: Scalar>(curve: &ClosedCurve<T>, shape: &[usize]) -> Result<AnomalyMask<T>> {
    let &[height, width] = shape else {
        return Err(Error::InvalidParameter(format!(
            "rasterize expects a 2D shape, got {shape:?}"
        )));
    };
    let mut support = vec![false; height * width];
    fill_even_odd(curve, height, width, &mut support);
    AnomalyMask::from_support(shape, &support)
}
