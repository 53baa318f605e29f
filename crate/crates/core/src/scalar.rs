//! Floating point abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast, ToPrimitive};
use rustfft::FftNum;

/// Real scalar usable throughout the crate: `f32` or `f64`.
///
/// Everything that touches the convolution kernel needs [`FftNum`], so the
/// bound is carried here once instead of on every generic item.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + FftNum
    + Default
    + Debug
    + Display
    + std::str::FromStr
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon as an `f64`, used for tolerance bookkeeping.
    const EPS: f64;

    /// Lossless-enough conversion from `f64` literals and configuration values.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const EPS: f64 = f32::EPSILON as f64;
}

impl Scalar for f64 {
    const EPS: f64 = f64::EPSILON;
}

/// Euclidean inner product of two 3-vectors.
#[inline]
pub fn dot3<T: Scalar>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq3<T: Scalar>(a: [T; 3]) -> T {
    dot3(a, a)
}
