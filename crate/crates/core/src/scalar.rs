use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// Numeric type that evaluation metrics are computed in.
///
/// Implemented for `f32`, `f64` and exact `Ratio<i64>`; metrics built from
/// integer counts are exact in the rational instantiation.
pub trait Scalar: Num + Copy + PartialOrd + Debug + ToPrimitive + Send + Sync + 'static {
    fn from_count(n: u64) -> Self;
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64"))
    }
}

/// `num / den`, or zero when the denominator is zero.
pub fn ratio_or_zero<S: Scalar>(num: u64, den: u64) -> S {
    if den == 0 {
        S::zero()
    } else {
        S::from_count(num) / S::from_count(den)
    }
}
