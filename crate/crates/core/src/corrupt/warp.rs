//! Radial warps and interpolated sampling.

use crate::region::SphereRegion;
use crate::scalar::Scalar;

/// Direction of a radial warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Radial {
    /// Content is pulled towards the center.
    Sink,
    /// Content is pushed away from the center.
    Source,
}

/// Sampling offset of the radial warp at `point` (padded continuous coordinates).
///
/// Inside the ball the output at `p` reads the input at `p + disp(p)` with
/// `disp(p) = ±strength · (1 − d/r) · (p − c)`, `d = |p − c|`. The field is
/// continuous, vanishes at the center and on the sphere surface, and for
/// `strength < 1` maps the ball onto itself without folding.
pub fn radial_displacement(region: &SphereRegion, strength: f64, dir: Radial, point: [f64; 3]) -> [f64; 3] {
    let c = region.center3();
    let u = [point[0] - c[0], point[1] - c[1], point[2] - c[2]];
    let d = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if d >= region.radius {
        return [0.0; 3];
    }
    let sign = match dir {
        Radial::Sink => 1.0,
        Radial::Source => -1.0,
    };
    let g = sign * strength * (1.0 - d / region.radius);
    [g * u[0], g * u[1], g * u[2]]
}

/// Trilinear sample of a padded grid at continuous position `p`; positions
/// outside the grid clamp to the nearest voxel center. Singleton axes reduce
/// this to bilinear sampling.
pub fn sample_linear<T: Scalar>(data: &[T], dims: [usize; 3], p: [f64; 3]) -> T {
    let mut i0 = [0usize; 3];
    let mut i1 = [0usize; 3];
    let mut f = [0.0f64; 3];
    for a in 0..3 {
        let u = (p[a] - 0.5).clamp(0.0, dims[a] as f64 - 1.0);
        let fl = u.floor();
        i0[a] = fl as usize;
        i1[a] = (i0[a] + 1).min(dims[a] - 1);
        f[a] = u - fl;
    }
    let at = |z: usize, y: usize, x: usize| data[(z * dims[1] + y) * dims[2] + x].wide();
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let c00 = lerp(at(i0[0], i0[1], i0[2]), at(i0[0], i0[1], i1[2]), f[2]);
    let c01 = lerp(at(i0[0], i1[1], i0[2]), at(i0[0], i1[1], i1[2]), f[2]);
    let c10 = lerp(at(i1[0], i0[1], i0[2]), at(i1[0], i0[1], i1[2]), f[2]);
    let c11 = lerp(at(i1[0], i1[1], i0[2]), at(i1[0], i1[1], i1[2]), f[2]);
    T::of(lerp(lerp(c00, c01, f[1]), lerp(c10, c11, f[1]), f[0]))
}
