//! Scalar abstraction for sparse-vector math.
//!
//! Storage values implement [`Scalar`]; inner products and norms are
//! accumulated in the associated [`Scalar::Acc`] type. For `f32` storage the
//! accumulator is `f64`, for exact rationals it is the rational itself.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Accumulator arithmetic used for dot products and norms.
pub trait Accumulator:
    Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

impl<A> Accumulator for A where
    A: Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

pub trait Scalar:
    Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    type Acc: Accumulator;

    fn widen(&self) -> Self::Acc;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    /// Lossy view used for randomized procedures (hash thresholds, sampling).
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    type Acc = f64;

    #[inline]
    fn widen(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for f64 {
    type Acc = f64;

    #[inline]
    fn widen(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    type Acc = BigRational;

    fn widen(&self) -> BigRational {
        self.clone()
    }
}

/// Exact rational conversion of a float; `None` for non-finite input.
pub fn exact_rational(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Converts an `f64` parameter (alpha, gamma, ...) into an accumulator value.
pub(crate) fn acc_from_f64<A: Accumulator>(x: f64) -> A {
    A::from_f64(x).expect("finite parameter")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_widens_to_f64_exactly() {
        let x = 0.1f32;
        assert_eq!(x.widen(), f64::from(x));
        assert!(x.is_positive());
        assert!(!0.0f32.is_positive());
    }

    #[test]
    fn rational_conversion_is_exact() {
        let r = exact_rational(0.1f32 as f64).unwrap();
        assert_eq!(r.to_f64().unwrap(), 0.1f32 as f64);
        assert!(exact_rational(f64::NAN).is_none());
    }
}
