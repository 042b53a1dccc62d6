//! Floating-point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used by the learning, clustering, caching and channel math.
///
/// Implemented for `f32` and `f64`. The simulator itself runs on `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or parameter.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically safe softmax of `exponents`: subtracts the maximum first.
pub(crate) fn softmax<T: Scalar>(exponents: &[T]) -> Vec<T> {
    let max = exponents
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    let mut out: Vec<T> = exponents.iter().map(|&x| (x - max).exp()).collect();
    let total: T = out.iter().copied().sum();
    for p in &mut out {
        *p = *p / total;
    }
    out
}

/// Checks that `p` is a probability vector within `tol`.
pub(crate) fn check_simplex<T: Scalar>(p: &[T], tol: f64) -> crate::Result<()> {
    let sum: T = p.iter().copied().sum();
    let sum = sum.to_f64_lossy();
    let negative = p.iter().any(|x| x.to_f64_lossy() < -tol || x.is_nan());
    if p.is_empty() || negative || (sum - 1.0).abs() > tol {
        return Err(crate::Error::InvalidPolicy { sum });
    }
    Ok(())
}
