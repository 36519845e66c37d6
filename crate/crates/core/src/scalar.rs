use std::fmt::Debug;
use std::ops::Neg;

use num::{BigInt, BigRational, Num, ToPrimitive, Zero};

/// Coefficient field for characters and polynomial evaluation.
///
/// `f64` is used for path numerics, [`BigRational`] for exact identity checks.
pub trait Scalar: Num + Neg<Output = Self> + Clone + Debug + PartialEq + Send + Sync + 'static {
    fn from_ratio(r: &BigRational) -> Self;

    fn from_i64(n: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl Scalar for f64 {
    fn from_ratio(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// `|a - b| <= tol`, with `tol == 0` meaning exact equality.
pub fn approx_eq<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    if tol == 0.0 {
        a == b
    } else {
        (a.clone() - b.clone()).abs_f64() <= tol
    }
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn ratio_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
