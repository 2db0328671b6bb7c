//! Floating-point abstraction shared by the generic numerical kernels.

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};

/// Real scalar usable by the generic modules (`measure`, `laplace`, `poincare`).
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a `usize` count into `T`.
#[inline]
pub(crate) fn from_usize<T: Scalar>(k: usize) -> T {
    T::from_usize(k).expect("count representable in scalar type")
}
