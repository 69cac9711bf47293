//! Exact scalar fields: big rationals and Gaussian rationals.
//!
//! Everything in the kernel is generic over [`Scalar`]. There is no floating
//! point anywhere on the computational path; decimal renderings exist only for
//! labelled, non-authoritative output.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Exact rational number in canonical reduced form (denominator positive).
pub type Rational = BigRational;

/// Field element used by every exact computation in the crate.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + Sub<Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + Mul<Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + Div<Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_int(n: i64) -> Self;
    fn from_rational(q: Rational) -> Self;
    /// Complex conjugate; the identity on rationals.
    fn conj(&self) -> Self;
    /// `Some(q)` when the value lies in the rational subfield.
    fn as_rational(&self) -> Option<Rational>;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
    /// Decimal rendering, for display only.
    fn approx(&self) -> String;

    fn is_real(&self) -> bool {
        self.as_rational().is_some()
    }

    /// Multiplicative inverse. Callers guarantee `self != 0`.
    fn recip(&self) -> Self {
        Self::one() / self
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_rational(q: Rational) -> Self {
        q
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn as_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() => Ok(Self::from_int(n.as_i64().unwrap())),
            other => Err(Error::Parse(format!("expected rational string, got {other}"))),
        }
    }
    fn approx(&self) -> String {
        format!("{:.12}", rational_to_f64(self))
    }
}

pub(crate) fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Build a rational from a numerator/denominator pair. Panics on `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parse `"p"`, `"p/q"` or `"-p/q"` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let err = || Error::Parse(format!("invalid rational `{s}`"));
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num = if num.is_empty() || num == "+" {
        BigInt::from(1)
    } else if num == "-" {
        -BigInt::from(1)
    } else {
        BigInt::from_str(num).map_err(|_| err())?
    };
    let den = BigInt::from_str(den).map_err(|_| err())?;
    if num_traits::Zero::is_zero(&den) {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(BigRational::new(num, den))
}

/// Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Gaussian {
    pub re: Rational,
    pub im: Rational,
}

impl Gaussian {
    pub fn new(re: Rational, im: Rational) -> Self {
        Self { re, im }
    }

    pub fn i() -> Self {
        Self::new(num_traits::Zero::zero(), num_traits::One::one())
    }

    /// Squared modulus `re² + im²`.
    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Parse forms like `1/2`, `i/2`, `-3i/4`, `1/2+i/3`, `1/2 - 2/5 i`.
    pub fn parse(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace() && *c != '*').collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty scalar".into()));
        }
        let mut terms = Vec::new();
        let mut start = 0;
        for (k, c) in compact.char_indices() {
            if k > start && (c == '+' || c == '-') {
                terms.push(&compact[start..k]);
                start = k;
            }
        }
        terms.push(&compact[start..]);

        let mut re = Rational::zero();
        let mut im = Rational::zero();
        for term in terms {
            if term.contains('i') {
                if term.matches('i').count() != 1 {
                    return Err(Error::Parse(format!("invalid imaginary term `{term}` in `{s}`")));
                }
                let stripped = term.replace('i', "");
                let q = match stripped.as_str() {
                    "" | "+" => Rational::one(),
                    "-" => -Rational::one(),
                    t if t.starts_with('/') => parse_rational(&format!("1{t}"))?,
                    t if t.starts_with("+/") => parse_rational(&format!("1{}", &t[1..]))?,
                    t if t.starts_with("-/") => parse_rational(&format!("-1{}", &t[1..]))?,
                    t => parse_rational(t)?,
                };
                im += q;
            } else {
                re += parse_rational(term)?;
            }
        }
        Ok(Self::new(re, im))
    }
}

impl fmt::Display for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        let im_abs = self.im.abs();
        let im_str = if num_traits::One::is_one(&im_abs) { "i".to_string() } else { format!("{im_abs}i") };
        if self.re.is_zero() {
            if self.im.is_negative() {
                write!(f, "-{im_str}")
            } else {
                write!(f, "{im_str}")
            }
        } else {
            let sign = if self.im.is_negative() { '-' } else { '+' };
            write!(f, "{}{}{}", self.re, sign, im_str)
        }
    }
}

impl Add for Gaussian {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}
impl<'a> Add<&'a Gaussian> for Gaussian {
    type Output = Self;
    fn add(self, rhs: &'a Gaussian) -> Self {
        Self::new(self.re + &rhs.re, self.im + &rhs.im)
    }
}
impl Sub for Gaussian {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}
impl<'a> Sub<&'a Gaussian> for Gaussian {
    type Output = Self;
    fn sub(self, rhs: &'a Gaussian) -> Self {
        Self::new(self.re - &rhs.re, self.im - &rhs.im)
    }
}
impl<'a> Mul<&'a Gaussian> for Gaussian {
    type Output = Self;
    fn mul(self, rhs: &'a Gaussian) -> Self {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Self::new(self.re * &rhs.re, Rational::zero());
        }
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        Self::new(re, im)
    }
}
impl Mul for Gaussian {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self * &rhs
    }
}
impl<'a> Div<&'a Gaussian> for Gaussian {
    type Output = Self;
    fn div(self, rhs: &'a Gaussian) -> Self {
        assert!(!Scalar::is_zero(rhs), "division by zero Gaussian rational");
        if rhs.im.is_zero() {
            return Self::new(self.re / &rhs.re, self.im / &rhs.re);
        }
        let n = rhs.norm_sqr();
        let num = self * &rhs.conj();
        Self::new(num.re / &n, num.im / &n)
    }
}
impl Div for Gaussian {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self / &rhs
    }
}
impl Neg for Gaussian {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}
impl<'a> AddAssign<&'a Gaussian> for Gaussian {
    fn add_assign(&mut self, rhs: &'a Gaussian) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}
impl<'a> SubAssign<&'a Gaussian> for Gaussian {
    fn sub_assign(&mut self, rhs: &'a Gaussian) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}
impl<'a> MulAssign<&'a Gaussian> for Gaussian {
    fn mul_assign(&mut self, rhs: &'a Gaussian) {
        let lhs = std::mem::replace(self, Gaussian::zero());
        *self = lhs * rhs;
    }
}

impl Scalar for Gaussian {
    fn zero() -> Self {
        Self::new(num_traits::Zero::zero(), num_traits::Zero::zero())
    }
    fn one() -> Self {
        Self::new(num_traits::One::one(), num_traits::Zero::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_int(n: i64) -> Self {
        Self::new(Rational::from_int(n), num_traits::Zero::zero())
    }
    fn from_rational(q: Rational) -> Self {
        Self::new(q, num_traits::Zero::zero())
    }
    fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }
    fn as_rational(&self) -> Option<Rational> {
        self.im.is_zero().then(|| self.re.clone())
    }
    fn to_json(&self) -> Value {
        json!({ "re": self.re.to_string(), "im": self.im.to_string() })
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Object(m) => {
                let re = m.get("re").map(Rational::from_json).transpose()?.unwrap_or_else(Rational::zero);
                let im = m.get("im").map(Rational::from_json).transpose()?.unwrap_or_else(Rational::zero);
                Ok(Self::new(re, im))
            }
            Value::String(s) => Self::parse(s),
            other => Err(Error::Parse(format!("expected Gaussian rational, got {other}"))),
        }
    }
    fn approx(&self) -> String {
        format!("{:.12}{:+.12}i", rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
}
