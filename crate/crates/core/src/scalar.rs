//! Scalar abstraction shared by every voxel-valued computation.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating-point voxel scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Sum + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; never fails for finite inputs.
    fn of(v: f64) -> Self;

    /// Widening (or identity) conversion to `f64`.
    fn wide(self) -> f64;

    /// Narrowing conversion used by the float32 payload format.
    fn to_f32_lossy(self) -> f32 {
        self.wide() as f32
    }
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn wide(self) -> f64 {
        self as f64
    }

    #[inline]
    fn to_f32_lossy(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn wide(self) -> f64 {
        self
    }
}
