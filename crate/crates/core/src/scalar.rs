//! The floating-point scalar every computation is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar type (`f32` or `f64`) together with the tolerances used when
/// certifying inequalities in that precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for certified inequalities on unit-scale quantities.
    fn tol() -> Self;

    /// Slack used for measure comparisons that should be exact up to rounding.
    fn eps() -> Self;

    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn usize(x: usize) -> Self {
        Self::from_usize(x).expect("integer representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn tol() -> Self {
        1e-9
    }
    #[inline]
    fn eps() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    #[inline]
    fn tol() -> Self {
        1e-4
    }
    #[inline]
    fn eps() -> Self {
        1e-6
    }
}

/// Fixed-shape pairwise summation. The association order depends only on the
/// input length, so results are reproducible however the terms were produced.
pub fn tree_sum<T: Scalar>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
}
