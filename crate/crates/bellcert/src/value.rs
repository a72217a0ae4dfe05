//! Numeric abstraction shared by the exact-rational and floating-point paths.
//!
//! Polytope and linear-programming code runs on [`Rat`] so that values such
//! as 1/3 or 1/6 are represented exactly; quantum simulation and
//! semidefinite programming run on `f64`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Exact rational scalar used throughout the polytope / LP paths.
pub type Rat = BigRational;

/// Scalar type a [`crate::scenario::Behavior`] table can hold.
///
/// Implemented for [`Rat`] (exact mode) and `f64` (floating mode). Equality
/// and sign tests are exact for rationals and tolerance-based for floats,
/// which is what makes operations such as no-signaling validation behave
/// per-mode without duplicating their logic.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sum<Self>
{
    const EXACT: bool;
    /// Mode tag used by the behavior JSON format.
    const MODE: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Convert an exact rational into this scalar (lossless for [`Rat`],
    /// nearest double for `f64`).
    fn from_rat(r: &Rat) -> Self;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    /// Serialize one table entry (`"p/q"` string or raw float).
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Option<Self>;
}

impl Scalar for Rat {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn to_f64(&self) -> f64 {
        num::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rat(self))
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        match v {
            serde_json::Value::String(s) => parse_rat(s),
            serde_json::Value::Number(n) => {
                n.as_i64().map(|i| BigRational::from_integer(BigInt::from(i)))
            }
            _ => None,
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rat(r: &Rat) -> Self {
        num::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        v.as_f64()
    }
}

/// Parse a `"p/q"` or plain-integer string into a rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(BigRational::new(p, q))
            }
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(BigRational::from_integer(p))
        }
    }
}

/// Format a rational as `"p/q"` (or `"p"` when the denominator is 1).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
