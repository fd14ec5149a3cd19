use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the numeric parts of the pipeline are generic over.
///
/// Implemented for `f32` and `f64`. Everything that produces a score,
/// probability or embedding coordinate is parameterised by it.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Tolerance used when checking that a distribution sums to one.
    fn mass_tolerance() -> Self;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).unwrap_or_else(Self::infinity)
    }
}

impl Scalar for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn mass_tolerance() -> Self {
        1e-5
    }
}

/// Cosine similarity of two equal-length vectors, `None` when either has zero norm.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na <= T::zero() || nb <= T::zero() {
        return None;
    }
    let c = dot / (na.sqrt() * nb.sqrt());
    Some(c.max(-T::one()).min(T::one()))
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1<T: Scalar>(precision: T, recall: T) -> T {
    let denom = precision + recall;
    if denom <= T::zero() {
        T::zero()
    } else {
        (T::one() + T::one()) * precision * recall / denom
    }
}
