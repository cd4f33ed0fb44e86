//! Number backends: exact rationals (the reference arithmetic) and `f64`.
//!
//! All the golden values of this theory are small rationals (2/3, 3/4, 11/12, 1),
//! so rational arithmetic is the default everywhere; the float backend exists for
//! large LPs where speed matters more than exactness.

use alloc::fmt::Debug;
use core::iter::Sum;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar, the default backend.
pub type Rat = num_rational::BigRational;

/// Absolute tolerance used by the float backend for every comparison.
pub const FLOAT_TOL: f64 = 1e-9;

/// Scalar arithmetic shared by the rational and float backends.
///
/// `EXACT` distinguishes the two: exact backends compare with `==`, the float
/// backend compares within [`FLOAT_TOL`].
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Sum<Self>
{
    const EXACT: bool;

    fn from_i64(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn recip(&self) -> Self;
    fn abs(&self) -> Self;
    /// Zero, exactly or within tolerance.
    fn is_zero_tol(&self) -> bool;
    /// Nonnegative, exactly or within tolerance.
    fn is_nonneg_tol(&self) -> bool;
    /// Approximate rendering for reports.
    fn to_f64_lossy(&self) -> f64;
    /// Fused update `self -= factor * x`, the simplex hot path. Backends
    /// override it to avoid temporaries.
    fn sub_mul(&mut self, factor: &Self, x: &Self) {
        *self = self.clone() - factor.clone() * x.clone();
    }
    /// In-place `self *= factor`.
    fn mul_assign_ref(&mut self, factor: &Self) {
        *self = self.clone() * factor.clone();
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        Rat::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rat::new(BigInt::from(num), BigInt::from(den))
    }

    fn recip(&self) -> Self {
        num_rational::Ratio::recip(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn is_zero_tol(&self) -> bool {
        self.is_zero()
    }

    fn is_nonneg_tol(&self) -> bool {
        !self.is_negative()
    }

    fn to_f64_lossy(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn sub_mul(&mut self, factor: &Self, x: &Self) {
        *self = &*self - &(factor * x);
    }

    fn mul_assign_ref(&mut self, factor: &Self) {
        *self = &*self * factor;
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn recip(&self) -> Self {
        1.0 / self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn is_zero_tol(&self) -> bool {
        f64::abs(*self) <= FLOAT_TOL
    }

    fn is_nonneg_tol(&self) -> bool {
        *self >= -FLOAT_TOL
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn sub_mul(&mut self, factor: &Self, x: &Self) {
        *self -= factor * x;
    }

    fn mul_assign_ref(&mut self, factor: &Self) {
        *self *= factor;
    }
}

fn ratio_to_f64(r: &Rat) -> f64 {
    // Good enough for reports; exact comparisons never round-trip through here.
    let num = r.numer();
    let den = r.denom();
    match (i128::try_from(num.clone()), i128::try_from(den.clone())) {
        (Ok(n), Ok(d)) => n as f64 / d as f64,
        _ => {
            // fall back to a scaled division for huge values
            let scaled = (num * BigInt::from(1_000_000_000i64)) / den;
            i128::try_from(scaled).map(|v| v as f64 / 1e9).unwrap_or(f64::NAN)
        }
    }
}

/// Convenience constructor used all over the tests.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_exactness() {
        let a = rat(1, 3) + rat(1, 6);
        assert_eq!(a, rat(1, 2));
        assert!(rat(0, 5).is_zero_tol());
        assert!(!rat(-1, 1_000_000_000).is_nonneg_tol());
    }

    #[test]
    fn float_tolerance() {
        assert!((1e-10f64).is_zero_tol());
        assert!(!(1e-8f64).is_zero_tol());
        assert!((-1e-10f64).is_nonneg_tol());
    }
}
