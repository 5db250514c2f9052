//! Coefficient rings for the exterior algebra and the matrix layer.
//!
//! Three coefficient families are supported: exact rationals
//! ([`Rational`]), machine reals (`f64`) and sparse polynomials over
//! commuting symbols ([`crate::poly::Poly`]). Every ring here contains the
//! rationals, so division by a nonzero integer is always available; the
//! exponential series in the exterior algebra needs it.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational numbers.
pub type Rational = BigRational;

/// Default relative tolerance used when comparing machine reals.
pub const REAL_TOLERANCE: f64 = 1e-10;

/// A commutative ring containing the rationals.
pub trait Coefficient: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negate(&self) -> Self;
    fn from_i64(value: i64) -> Self;
    /// Multiplies by `1/k`. `k` must be nonzero.
    fn div_int(&self, k: i64) -> Self;

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.negate())
    }

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// Equality up to `rel_tol` for inexact rings; exact rings ignore the tolerance.
    fn close_to(&self, other: &Self, _rel_tol: f64) -> bool {
        self == other
    }
}

/// A field with an ordering, used by the dense matrix routines.
pub trait Field: Coefficient + PartialOrd {
    fn divide(&self, other: &Self) -> Self;
    /// Absolute value as a float; used for pivot selection and diagnostics.
    fn magnitude(&self) -> f64;
    fn to_f64(&self) -> f64;
    fn from_f64(value: f64) -> Self;
    /// Whether the ring is exact; inexact fields use tolerances in pivoting.
    fn is_exact() -> bool;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            self.negate()
        } else {
            self.clone()
        }
    }
}

impl Coefficient for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negate(&self) -> Self {
        -self
    }
    fn from_i64(value: i64) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }
    fn div_int(&self, k: i64) -> Self {
        assert!(k != 0, "division by zero");
        self / BigRational::from_integer(BigInt::from(k))
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

impl Field for Rational {
    fn divide(&self, other: &Self) -> Self {
        self / other
    }
    fn magnitude(&self) -> f64 {
        ToPrimitive::to_f64(&Signed::abs(self)).unwrap_or(f64::INFINITY)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(value: f64) -> Self {
        BigRational::from_float(value).expect("finite float")
    }
    fn is_exact() -> bool {
        true
    }
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negate(&self) -> Self {
        -self
    }
    fn from_i64(value: i64) -> Self {
        value as f64
    }
    fn div_int(&self, k: i64) -> Self {
        self / k as f64
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn close_to(&self, other: &Self, rel_tol: f64) -> bool {
        approx_eq(*self, *other, rel_tol)
    }
}

impl Field for f64 {
    fn divide(&self, other: &Self) -> Self {
        self / other
    }
    fn magnitude(&self) -> f64 {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(value: f64) -> Self {
        value
    }
    fn is_exact() -> bool {
        false
    }
}

/// Mixed absolute/relative comparison: `|a-b| <= tol * max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    let scale = 1f64.max(a.abs()).max(b.abs());
    (a - b).abs() <= tol * scale
}

/// Shorthand for the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
