//! Spherical regions used to localize test corruptions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::volume::{axis_offset, check_shape, pad3, AnomalyMask};

/// Closed ball in continuous voxel coordinates (voxel `i` has its center at `i + 0.5`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereRegion {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Inclusive voxel-index bounds of a region, padded to three axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoxelBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl VoxelBox {
    pub fn extent(&self, axis: usize) -> usize {
        self.hi[axis] + 1 - self.lo[axis]
    }
}

impl SphereRegion {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("sphere radius {radius} must be > 0")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("sphere center must be finite".into()));
        }
        Ok(Self { center, radius })
    }

    /// Center padded to three axes; padded axes sit on the single voxel center 0.5.
    pub fn center3(&self) -> [f64; 3] {
        match *self.center.as_slice() {
            [y, x] => [0.5, y, x],
            [z, y, x] => [z, y, x],
            _ => panic!("sphere center must have 2 or 3 coordinates"),
        }
    }

    /// Membership of the voxel whose padded index is `idx`.
    #[inline]
    pub fn contains3(&self, idx: [usize; 3]) -> bool {
        let c = self.center3();
        let d2: f64 = (0..3)
            .map(|a| {
                let d = idx[a] as f64 + 0.5 - c[a];
                d * d
            })
            .sum();
        d2 <= self.radius * self.radius
    }

    pub fn check_within(&self, shape: &[usize]) -> Result<()> {
        check_shape(shape)?;
        if self.center.len() != shape.len() {
            return Err(Error::InvalidParameter(format!(
                "sphere has {} coordinates, volume has {} axes",
                self.center.len(),
                shape.len()
            )));
        }
        for (c, &n) in self.center.iter().zip(shape) {
            if *c < 0.0 || *c > n as f64 {
                return Err(Error::InfeasibleRegion(format!(
                    "sphere center {:?} outside shape {:?}",
                    self.center, shape
                )));
            }
        }
        Ok(())
    }

    /// Voxel bounding box of the ball clipped to the grid, or `None` when empty.
    pub fn voxel_box(&self, shape: &[usize]) -> Option<VoxelBox> {
        let dims = pad3(shape);
        let c = self.center3();
        let off = axis_offset(shape.len());
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            if a < off {
                continue;
            }
            // voxel i is inside along this axis only if |i + 0.5 - c| <= r
            let first = (c[a] - self.radius - 0.5).ceil().max(0.0);
            let last = (c[a] + self.radius - 0.5).floor().min(dims[a] as f64 - 1.0);
            if first > last {
                return None;
            }
            lo[a] = first as usize;
            hi[a] = last as usize;
        }
        Some(VoxelBox { lo, hi })
    }

    /// Calls `f(offset, padded_index)` for every voxel in the ball, in row-major order.
    pub fn for_each_voxel(&self, shape: &[usize], mut f: impl FnMut(usize, [usize; 3])) {
        let dims = pad3(shape);
        let Some(bx) = self.voxel_box(shape) else {
            return;
        };
        for z in bx.lo[0]..=bx.hi[0] {
            for y in bx.lo[1]..=bx.hi[1] {
                for x in bx.lo[2]..=bx.hi[2] {
                    let idx = [z, y, x];
                    if self.contains3(idx) {
                        f((z * dims[1] + y) * dims[2] + x, idx);
                    }
                }
            }
        }
    }

    pub fn voxel_count(&self, shape: &[usize]) -> usize {
        let mut n = 0;
        self.for_each_voxel(shape, |_, _| n += 1);
        n
    }
}

/// Draws a ball with radius uniform in `radius_range · min(shape)` and a center
/// uniform over the positions that keep the ball inside the grid.
pub fn sample_sphere(
    stream: RngStream,
    shape: &[usize],
    radius_range: (f64, f64),
) -> Result<SphereRegion> {
    check_shape(shape)?;
    let (r_min, r_max) = radius_range;
    if !(r_min > 0.0 && r_min <= r_max && r_max < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "sphere radius range ({r_min}, {r_max}) must satisfy 0 < min <= max < 0.5"
        )));
    }
    let min_side = *shape.iter().min().expect("non-empty shape") as f64;
    // Every ball of radius >= sqrt(D)/2 holds at least one voxel center.
    let covering = (shape.len() as f64).sqrt() / 2.0;
    if r_min * min_side < covering {
        return Err(Error::InfeasibleRegion(format!(
            "minimum radius {} voxels cannot guarantee a non-empty sphere in {:?}",
            r_min * min_side,
            shape
        )));
    }
    let mut rng = stream.rng();
    let frac = if r_min == r_max {
        r_min
    } else {
        rng.random_range(r_min..=r_max)
    };
    let radius = frac * min_side;
    let center = shape
        .iter()
        .map(|&n| {
            let (lo, hi) = (radius, n as f64 - radius);
            if lo >= hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        })
        .collect();
    SphereRegion::new(center, radius)
}

/// Materializes a region as a binary mask.
pub fn sphere_indicator<T: Scalar>(region: &SphereRegion, shape: &[usize]) -> Result<AnomalyMask<T>> {
    region.check_within(shape)?;
    let mut values = vec![T::zero(); shape.iter().product()];
    region.for_each_voxel(shape, |off, _| values[off] = T::one());
    AnomalyMask::new(shape.to_vec(), values)
}
