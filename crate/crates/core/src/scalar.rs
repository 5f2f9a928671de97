//! Scalar types the linear-algebra layer is generic over.
//!
//! `f64`/`f32` are used on the sampling path. [`num_rational::Rational64`]
//! gives exact arithmetic for verifying the covariance identities.

use std::fmt::Debug;
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// A field element usable as an edge label.
pub trait Scalar:
    Copy + Num + Neg<Output = Self> + PartialOrd + Debug + Send + Sync + 'static
{
    /// The value `num / den`.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }

    fn to_f64(self) -> f64;

    /// Exact types are always finite.
    fn is_finite(self) -> bool;

    /// Whether `self` should be treated as zero during elimination.
    fn is_negligible(self) -> bool;

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            fn is_negligible(self) -> bool {
                <$t>::abs(self) < $eps
            }
        }
    };
}

impl_float_scalar!(f64, 1e-9);
impl_float_scalar!(f32, 1e-4);

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
    fn is_finite(self) -> bool {
        true
    }
    fn is_negligible(self) -> bool {
        num_traits::Zero::is_zero(&self)
    }
}

impl Scalar for Ratio<i128> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num as i128, den as i128)
    }
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
    fn is_finite(self) -> bool {
        true
    }
    fn is_negligible(self) -> bool {
        num_traits::Zero::is_zero(&self)
    }
}
