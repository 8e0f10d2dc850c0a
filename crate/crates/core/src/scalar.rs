//! Floating-point scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the library is generic over (`f32` or `f64`).
///
/// Everything in this crate involves logarithms, square roots or special
/// functions, so only floating-point types implement it.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only for non-representable input,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used when declaring numerical rank deficiency.
    fn rank_tolerance() -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn rank_tolerance() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    #[inline]
    fn rank_tolerance() -> Self {
        // 1e-10 is below f32 resolution.
        1e-5
    }
}
