//! Coefficient scalars: exact rationals or 64-bit floats.
//!
//! A polynomial is homogeneous in its coefficient mode; mixing modes in
//! one arithmetic operation is an input error, caught at the polynomial
//! level. Exact mode never rounds.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::PolyError;

/// Coefficient arithmetic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CoeffMode {
    /// Arbitrary-precision rationals, stored in lowest terms.
    Exact,
    /// IEEE-754 binary64.
    Float,
}

/// A coefficient in one of the two modes.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> CoeffMode {
        match self {
            Scalar::Rational(_) => CoeffMode::Exact,
            Scalar::Float(_) => CoeffMode::Float,
        }
    }

    pub fn zero(mode: CoeffMode) -> Self {
        match mode {
            CoeffMode::Exact => Scalar::Rational(BigRational::zero()),
            CoeffMode::Float => Scalar::Float(0.0),
        }
    }

    pub fn one(mode: CoeffMode) -> Self {
        Scalar::from_integer(1, mode)
    }

    pub fn from_integer(n: i64, mode: CoeffMode) -> Self {
        match mode {
            CoeffMode::Exact => Scalar::Rational(BigRational::from_integer(BigInt::from(n))),
            CoeffMode::Float => Scalar::Float(n as f64),
        }
    }

    pub fn from_ratio(num: i64, den: i64, mode: CoeffMode) -> Self {
        assert!(den != 0, "zero denominator");
        match mode {
            CoeffMode::Exact => {
                Scalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
            }
            CoeffMode::Float => Scalar::Float(num as f64 / den as f64),
        }
    }

    /// Exact conversion of a float to a rational (dyadic), used when
    /// replaying numeric certificates in exact arithmetic.
    pub fn float_to_exact(v: f64) -> Result<Self, PolyError> {
        BigRational::from_float(v)
            .map(Scalar::Rational)
            .ok_or_else(|| PolyError::BadCoefficient(format!("non-finite float {v}")))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Float(f) => *f == 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(f) => *f,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.abs()),
            Scalar::Float(f) => Scalar::Float(f.abs()),
        }
    }

    /// Sign as -1, 0, or 1. Float NaN reports 0.
    pub fn signum(&self) -> i32 {
        match self {
            Scalar::Rational(r) => {
                if r.is_zero() {
                    0
                } else if r.is_positive() {
                    1
                } else {
                    -1
                }
            }
            Scalar::Float(f) => {
                if *f > 0.0 {
                    1
                } else if *f < 0.0 {
                    -1
                } else {
                    0
                }
            }
        }
    }

    fn binop(
        &self,
        other: &Scalar,
        fr: impl Fn(&BigRational, &BigRational) -> BigRational,
        ff: impl Fn(f64, f64) -> f64,
    ) -> Scalar {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(fr(a, b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(ff(*a, *b)),
            _ => panic!("scalar mode mismatch: exact and float operands mixed"),
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.binop(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.binop(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.binop(other, |a, b| a * b, |a, b| a * b)
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Float(f) => Scalar::Float(-f),
        }
    }

    pub fn pow(&self, e: u32) -> Scalar {
        let mut acc = Scalar::one(self.mode());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Parses a coefficient string: integer, decimal, or `p/q`.
    pub fn parse(text: &str, mode: CoeffMode) -> Result<Self, PolyError> {
        let s = text.trim();
        if s.is_empty() {
            return Err(PolyError::BadCoefficient("empty coefficient".into()));
        }
        match mode {
            CoeffMode::Float => f64::from_str(s)
                .map(Scalar::Float)
                .map_err(|_| PolyError::BadCoefficient(s.into())),
            CoeffMode::Exact => parse_exact(s).map(Scalar::Rational),
        }
    }
}

fn parse_exact(s: &str) -> Result<BigRational, PolyError> {
    let bad = || PolyError::BadCoefficient(s.into());
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(PolyError::BadCoefficient(format!("{s}: zero denominator")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!(
            "{}{}",
            if int_part.is_empty() || int_part == "-" || int_part == "+" {
                format!("{int_part}0")
            } else {
                int_part.to_string()
            },
            frac_part
        );
        let n = BigInt::from_str(&digits).map_err(|_| bad())?;
        let d = BigInt::from(10u32).pow(frac_part.len() as u32);
        return Ok(BigRational::new(n, d));
    }
    BigInt::from_str(s)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.partial_cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.partial_cmp(b),
            _ => None,
        }
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}
