//! Scalar abstraction for the probability vector.
//!
//! The sampling state is generic over the number type holding probability
//! mass. `f64` is the production type; `f32` is supported for memory-bound
//! spaces; [`BigRational`] gives exact arithmetic, which lets tests check
//! ratio-preservation properties with `==` instead of a tolerance.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts an `f64` measurement into the scalar type.
    ///
    /// Panics on NaN or infinite input; callers validate measurements first.
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(|| panic!("non-finite scalar input {value}"))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self` raised to a small non-negative integer power.
    fn powu(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }

    fn is_positive_scalar(&self) -> bool {
        *self > Self::zero()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for BigRational {}

pub(crate) fn clamp<S: Scalar>(value: S, lo: &S, hi: &S) -> S {
    if value < *lo {
        lo.clone()
    } else if value > *hi {
        hi.clone()
    } else {
        value
    }
}

/// Exact rational from a decimal `f64` (the binary value, not its printed form).
pub fn exact(value: f64) -> BigRational {
    BigRational::from_f64(value).expect("finite")
}

/// Exact rational `numer / denom`.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
