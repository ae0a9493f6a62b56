//! Scalar abstractions shared by every numerical module.
//!
//! The simplex geometry and both tracers only need field arithmetic and an
//! order, so they are written against [`Scalar`] and run unchanged on `f32`,
//! `f64` and exact rationals. The computation graph needs square roots and is
//! written against [`Real`].

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed};

/// Ordered field element.
pub trait Scalar:
    Num + Signed + PartialOrd + Copy + Debug + Display + FromPrimitive + Send + Sync + 'static
{
    /// Lossy conversion used for tolerances and reporting.
    fn to_f64(self) -> f64;

    fn from_int(value: i64) -> Self {
        Self::from_i64(value).expect("integer representable in scalar type")
    }

    /// `num / den` computed in the scalar type itself, so dyadic and rational
    /// constants stay exact where the type allows it.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    /// True when the type carries no rounding error.
    fn is_exact() -> bool {
        false
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn relu(self) -> Self {
        self.max_of(Self::zero())
    }
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for Ratio<i64> {
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn is_exact() -> bool {
        true
    }
}

impl Scalar for Ratio<i128> {
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn is_exact() -> bool {
        true
    }
}

/// Floating-point scalar: everything in [`Scalar`] plus `sqrt` and friends.
pub trait Real: Scalar + Float {
    fn from_f64_lossy(value: f64) -> Self;

    /// [`Scalar::to_f64`] without the clash with `NumCast::to_f64`.
    fn real(self) -> f64 {
        Scalar::to_f64(self)
    }
}

impl Real for f64 {
    fn from_f64_lossy(value: f64) -> Self {
        value
    }
}

impl Real for f32 {
    fn from_f64_lossy(value: f64) -> Self {
        value as f32
    }
}

/// `|a - b| <= tol`, evaluated in `f64`.
pub fn close<S: Scalar>(a: S, b: S, tol: f64) -> bool {
    (a - b).abs().to_f64() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_are_exact_for_rationals() {
        let q = <Ratio<i128> as Scalar>::ratio(1, 3);
        assert_eq!(q * Ratio::from_integer(3), Ratio::from_integer(1));
        assert!(<Ratio<i128> as Scalar>::is_exact());
        assert!(!<f64 as Scalar>::is_exact());
    }

    #[test]
    fn relu_clamps() {
        assert_eq!((-2.0f64).relu(), 0.0);
        assert_eq!(3.5f32.relu(), 3.5);
        assert_eq!(<Ratio<i64> as Scalar>::ratio(-1, 2).relu(), Ratio::from_integer(0));
    }
}
