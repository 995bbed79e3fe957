//! Numeric scalar abstraction shared by the scoring and sampling code.
//!
//! Scores (precision, recall, F1) only need field arithmetic, so they are
//! generic over [`Scalar`] and can be computed exactly with rationals.
//! Sampling probabilities need `powf`, so they additionally require
//! [`num_traits::Float`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;

pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: u64) -> Self;

    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn from_count(n: u64) -> Self {
        n as f64
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_count(n: u64) -> Self {
        n as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64"))
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// `num / den`, or zero when `den` is zero.
#[inline]
pub fn ratio_or_zero<S: Scalar>(num: u64, den: u64) -> S {
    if den == 0 {
        S::zero()
    } else {
        S::from_count(num) / S::from_count(den)
    }
}

/// Harmonic mean of `p` and `r`, zero when both are zero.
#[inline]
pub fn harmonic_mean<S: Scalar>(p: S, r: S) -> S {
    let sum = p + r;
    if sum == S::zero() {
        S::zero()
    } else {
        let two = S::one() + S::one();
        two * p * r / sum
    }
}
