//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate that does arithmetic is generic over [`Scalar`],
//! a float-like type from `num-traits`. `f64` is what the CLI and the
//! experiment harness use; `f32` works for the linear algebra but is too
//! coarse for the tighter tolerances in the estimator contracts.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable in all matrix kernels.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Product
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Product
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for converting an `f64` literal into the working scalar type.
#[inline]
pub fn t<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into the working scalar type.
#[inline]
pub fn t_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}
