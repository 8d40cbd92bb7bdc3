//! Separable Gaussian filtering with edge replication.
//!
//! The blur is evaluated on an arbitrary voxel box: each 1D pass computes only
//! the values the following passes read. Evaluating the whole grid and
//! evaluating a box produce bit-identical values on the box.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{axis_offset, Volume};

/// Normalized Gaussian taps truncated at `ceil(4σ)`.
#[derive(Debug, Clone)]
pub struct GaussianKernel<T> {
    weights: Vec<T>,
    radius: usize,
}

impl<T: Scalar> GaussianKernel<T> {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("blur sigma {sigma} must be > 0")));
        }
        let radius = (4.0 * sigma).ceil() as usize;
        let raw: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let k = i as f64 - radius as f64;
                (-k * k / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        Ok(Self {
            weights: raw.iter().map(|w| T::of(w / sum)).collect(),
            radius,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Half-open voxel box `[lo, hi)` in padded 3-axis coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Box3 {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Box3 {
    pub fn full(dims: [usize; 3]) -> Self {
        Self { lo: [0; 3], hi: dims }
    }

    fn dims(&self) -> [usize; 3] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }

    fn grow(&self, axis: usize, by: usize, limit: usize) -> Self {
        let mut b = *self;
        b.lo[axis] = b.lo[axis].saturating_sub(by);
        b.hi[axis] = (b.hi[axis] + by).min(limit);
        b
    }

    fn len(&self) -> usize {
        self.dims().iter().product()
    }
}

/// Values of a box of the grid, stored row-major relative to `frame.lo`.
struct Patch<T> {
    frame: Box3,
    data: Vec<T>,
}

impl<T: Scalar> Patch<T> {
    #[inline]
    fn at(&self, idx: [usize; 3]) -> T {
        let d = self.frame.dims();
        let (z, y, x) = (
            idx[0] - self.frame.lo[0],
            idx[1] - self.frame.lo[1],
            idx[2] - self.frame.lo[2],
        );
        self.data[(z * d[1] + y) * d[2] + x]
    }
}

/// One 1D convolution pass along `axis`, evaluated on `out_box`.
fn pass<T: Scalar>(src: &Patch<T>, grid: [usize; 3], axis: usize, out_box: Box3, kernel: &GaussianKernel<T>) -> Patch<T> {
    let od = out_box.dims();
    let r = kernel.radius as isize;
    let n = grid[axis] as isize;
    let mut data = vec![T::zero(); out_box.len()];
    let plane = od[1] * od[2];
    if plane == 0 {
        return Patch { frame: out_box, data };
    }
    data.par_chunks_mut(plane).enumerate().for_each(|(zi, out)| {
        let z = out_box.lo[0] + zi;
        for yi in 0..od[1] {
            let y = out_box.lo[1] + yi;
            for xi in 0..od[2] {
                let x = out_box.lo[2] + xi;
                let idx = [z, y, x];
                let center = idx[axis] as isize;
                let mut acc = T::zero();
                for (k, &w) in kernel.weights.iter().enumerate() {
                    let mut j = idx;
                    j[axis] = (center + k as isize - r).clamp(0, n - 1) as usize;
                    acc = acc + w * src.at(j);
                }
                out[yi * od[2] + xi] = acc;
            }
        }
    });
    Patch { frame: out_box, data }
}

/// Gaussian blur of `volume` evaluated on `target` (padded coordinates).
///
/// Axes are filtered last-to-first; singleton axes introduced by padding a 2D
/// image are left untouched. Returns the blurred values of `target`, row-major.
pub fn blur_box<T: Scalar>(volume: &Volume<T>, sigma: f64, target: Box3) -> Result<Vec<T>> {
    let kernel = GaussianKernel::<T>::new(sigma)?;
    let grid = volume.dims3();
    let first_axis = axis_offset(volume.ndim());
    let r = kernel.radius;

    // Box each pass must produce: the target grown along every axis filtered later.
    let axes: Vec<usize> = (first_axis..3).rev().collect();
    let mut boxes = Vec::with_capacity(axes.len());
    for (i, _) in axes.iter().enumerate() {
        let mut b = target;
        for &later in &axes[i + 1..] {
            b = b.grow(later, r, grid[later]);
        }
        boxes.push(b);
    }

    let mut current = Patch {
        frame: Box3::full(grid),
        data: volume.data().to_vec(),
    };
    for (&axis, &b) in axes.iter().zip(&boxes) {
        current = pass(&current, grid, axis, b, &kernel);
    }
    if current.frame != target {
        // only reachable when no axis is filtered
        let mut out = Vec::with_capacity(target.len());
        for z in target.lo[0]..target.hi[0] {
            for y in target.lo[1]..target.hi[1] {
                for x in target.lo[2]..target.hi[2] {
                    out.push(current.at([z, y, x]));
                }
            }
        }
        return Ok(out);
    }
    Ok(current.data)
}

/// Gaussian blur of the whole volume.
pub fn gaussian_blur<T: Scalar>(volume: &Volume<T>, sigma: f64) -> Result<Volume<T>> {
    let data = blur_box(volume, sigma, Box3::full(volume.dims3()))?;
    volume.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn random(shape: Vec<usize>, seed: u64) -> Volume<f64> {
        let n = shape.iter().product();
        let mut rng = RngStream::new(seed, 0).rng();
        Volume::new("r", shape, (0..n).map(|_| rng.random::<f64>()).collect(), (0.0, 1.0)).unwrap()
    }

    /// Direct triple-loop separable convolution with clamped reads.
    fn oracle(v: &Volume<f64>, sigma: f64) -> Vec<f64> {
        let r = (4.0 * sigma).ceil() as isize;
        let w: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let s: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / s).collect();
        let d = v.dims3();
        let mut cur = v.data().to_vec();
        for axis in (3 - v.ndim()..3).rev() {
            let mut next = vec![0.0; cur.len()];
            for z in 0..d[0] {
                for y in 0..d[1] {
                    for x in 0..d[2] {
                        let mut acc = 0.0;
                        for (ki, k) in (-r..=r).enumerate() {
                            let mut idx = [z as isize, y as isize, x as isize];
                            idx[axis] = (idx[axis] + k).clamp(0, d[axis] as isize - 1);
                            acc += w[ki] * cur[((idx[0] as usize * d[1]) + idx[1] as usize) * d[2] + idx[2] as usize];
                        }
                        next[(z * d[1] + y) * d[2] + x] = acc;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn kernel_is_normalized() {
        let k = GaussianKernel::<f64>::new(4.0).unwrap();
        assert_eq!(k.radius(), 16);
        assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(GaussianKernel::<f64>::new(0.0).is_err());
    }

    #[test]
    fn matches_direct_convolution_3d() {
        let v = random(vec![12, 9, 14], 1);
        let got = gaussian_blur(&v, 1.3).unwrap();
        for (a, b) in got.data().iter().zip(oracle(&v, 1.3)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_convolution_2d() {
        let v = random(vec![17, 11], 2);
        let got = gaussian_blur(&v, 2.0).unwrap();
        for (a, b) in got.data().iter().zip(oracle(&v, 2.0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn box_equals_full_bitwise() {
        let v = random(vec![20, 18, 16], 3);
        let full = gaussian_blur(&v, 1.7).unwrap();
        let b = Box3 {
            lo: [3, 0, 9],
            hi: [11, 7, 16],
        };
        let part = blur_box(&v, 1.7, b).unwrap();
        let mut i = 0;
        for z in 3..11 {
            for y in 0..7 {
                for x in 9..16 {
                    assert_eq!(part[i], full.get(&[z, y, x]));
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn constant_stays_constant() {
        let v = Volume::filled("c", vec![10, 10, 10], 0.25f32).unwrap();
        let b = gaussian_blur(&v, 2.5).unwrap();
        assert!(b.data().iter().all(|&x| (x - 0.25).abs() < 1e-6));
    }
}
