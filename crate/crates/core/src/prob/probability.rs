use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ProbError;

/// Absolute tolerance applied whenever floating-point values take part in a
/// comparison and no explicit tolerance was given.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// A probability value.
///
/// Values are exact rationals unless they were ingested as decimals or come
/// out of a transcendental evaluation (sin², powers). Any arithmetic that
/// touches a floating value yields a floating value.
#[derive(Clone, Debug)]
pub struct Probability(Repr);

#[derive(Clone, Debug)]
enum Repr {
    Exact(BigRational),
    Float(f64),
}

impl Probability {
    pub fn zero() -> Self {
        Probability(Repr::Exact(BigRational::zero()))
    }

    pub fn one() -> Self {
        Probability(Repr::Exact(BigRational::one()))
    }

    pub fn half() -> Self {
        Self::ratio(1, 2)
    }

    /// `num/den` as an exact rational. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        Probability(Repr::Exact(BigRational::new(num.into(), den.into())))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Probability(Repr::Exact(r))
    }

    pub fn from_f64(v: f64) -> Self {
        Probability(Repr::Float(v))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.0, Repr::Exact(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.0 {
            Repr::Exact(r) => Some(r),
            Repr::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Repr::Float(v) => *v,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Exact(r) => r.is_zero(),
            Repr::Float(v) => *v == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Exact(r) => r.is_positive(),
            Repr::Float(v) => *v > 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Exact(r) => r.is_negative(),
            Repr::Float(v) => *v < 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.0 {
            Repr::Exact(r) => r.is_one(),
            Repr::Float(v) => *v == 1.0,
        }
    }

    /// `1 - p`.
    pub fn complement(&self) -> Self {
        Self::one() - self.clone()
    }

    /// `|self - other|`.
    pub fn abs_diff(&self, other: &Self) -> Self {
        let d = self.clone() - other.clone();
        if d.is_negative() {
            Self::zero() - d
        } else {
            d
        }
    }

    /// Checked construction: the value must lie in `[0, 1]`.
    pub fn checked(self) -> Result<Self, ProbError> {
        if self.is_negative() {
            return Err(ProbError::NegativeWeight(self.to_string()));
        }
        if let Repr::Float(v) = self.0 {
            if !v.is_finite() {
                return Err(ProbError::InvalidNumber(v.to_string()));
            }
        }
        if self > Self::one() {
            return Err(ProbError::OutOfRange(self.to_string()));
        }
        Ok(self)
    }

    /// Equality under an absolute tolerance.
    ///
    /// Two exact values with a zero tolerance compare exactly. If either side
    /// is floating and the tolerance is zero, [`FLOAT_TOLERANCE`] is used.
    pub fn agrees(&self, other: &Self, tol: Tolerance) -> bool {
        match (&self.0, &other.0) {
            (Repr::Exact(a), Repr::Exact(b)) if tol.is_exact() => a == b,
            _ => (self.to_f64() - other.to_f64()).abs() <= tol.effective(),
        }
    }
}

/// Absolute tolerance for probability comparisons. Zero means exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const EXACT: Tolerance = Tolerance(0.0);

    pub fn new(v: f64) -> Result<Self, ProbError> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(ProbError::InvalidNumber(v.to_string()));
        }
        Ok(Tolerance(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_exact(self) -> bool {
        self.0 == 0.0
    }

    /// The absolute bound used once floating values are involved.
    pub fn effective(self) -> f64 {
        if self.is_exact() {
            FLOAT_TOLERANCE
        } else {
            self.0
        }
    }
}

fn binop(
    a: Probability,
    b: Probability,
    exact: impl FnOnce(BigRational, BigRational) -> BigRational,
    float: impl FnOnce(f64, f64) -> f64,
) -> Probability {
    match (a.0, b.0) {
        (Repr::Exact(x), Repr::Exact(y)) => Probability(Repr::Exact(exact(x, y))),
        (x, y) => {
            let fx = Probability(x).to_f64();
            let fy = Probability(y).to_f64();
            Probability(Repr::Float(float(fx, fy)))
        }
    }
}

impl Add for Probability {
    type Output = Probability;
    fn add(self, rhs: Self) -> Self {
        binop(self, rhs, |a, b| a + b, |a, b| a + b)
    }
}

impl Sub for Probability {
    type Output = Probability;
    fn sub(self, rhs: Self) -> Self {
        binop(self, rhs, |a, b| a - b, |a, b| a - b)
    }
}

impl Mul for Probability {
    type Output = Probability;
    fn mul(self, rhs: Self) -> Self {
        binop(self, rhs, |a, b| a * b, |a, b| a * b)
    }
}

/// Division. Panics on an exact zero divisor; callers check positivity first.
impl Div for Probability {
    type Output = Probability;
    fn div(self, rhs: Self) -> Self {
        binop(self, rhs, |a, b| a / b, |a, b| a / b)
    }
}

impl<'a> Add<&'a Probability> for &'a Probability {
    type Output = Probability;
    fn add(self, rhs: &Probability) -> Probability {
        self.clone() + rhs.clone()
    }
}

impl<'a> Mul<&'a Probability> for &'a Probability {
    type Output = Probability;
    fn mul(self, rhs: &Probability) -> Probability {
        self.clone() * rhs.clone()
    }
}

impl std::iter::Sum for Probability {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Probability::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Probability> for Probability {
    fn sum<I: Iterator<Item = &'a Probability>>(iter: I) -> Self {
        iter.fold(Probability::zero(), |a, b| a + b.clone())
    }
}

/// Structural equality: exact values compare as rationals, floats bitwise
/// by value, and an exact value never equals a float.
impl PartialEq for Probability {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Exact(a), Repr::Exact(b)) => a == b,
            (Repr::Float(a), Repr::Float(b)) => a == b,
            _ => false,
        }
    }
}

impl PartialOrd for Probability {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (&self.0, &other.0) {
            (Repr::Exact(a), Repr::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl From<BigRational> for Probability {
    fn from(r: BigRational) -> Self {
        Probability::from_rational(r)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Exact(r) => write!(f, "{r}"),
            // Debug keeps a '.' or exponent, so the text re-parses as floating.
            Repr::Float(v) => write!(f, "{v:?}"),
        }
    }
}

/// Parses `"num/den"` and plain integers exactly; anything else is read as a
/// decimal and becomes a floating value.
impl FromStr for Probability {
    type Err = ProbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || ProbError::InvalidNumber(s.to_string());
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Probability(Repr::Exact(BigRational::new(n, d))));
        }
        if !t.is_empty() && t.trim_start_matches(['-', '+']).bytes().all(|b| b.is_ascii_digit()) {
            let n: BigInt = t.parse().map_err(|_| bad())?;
            return Ok(Probability(Repr::Exact(BigRational::from_integer(n))));
        }
        let v: f64 = t.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        Ok(Probability(Repr::Float(v)))
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
