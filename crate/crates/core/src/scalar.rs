//! Scalar abstraction shared by grids, knot vectors and spline models.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point type the numeric core is generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 converts to every Real")
    }

    /// Lossy conversion from `usize`.
    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::of(v as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn vec3_of<T: Real>(v: [f64; 3]) -> [T; 3] {
    [T::of(v[0]), T::of(v[1]), T::of(v[2])]
}

pub(crate) fn vec3_f64<T: Real>(v: [T; 3]) -> [f64; 3] {
    [
        v[0].to_f64_lossy(),
        v[1].to_f64_lossy(),
        v[2].to_f64_lossy(),
    ]
}
