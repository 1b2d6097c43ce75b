//! Arithmetic backends.
//!
//! Every evaluation routine is generic over [`Scalar`], which is implemented
//! for `f64` and for arbitrary-precision rationals. Geometric data (interval
//! endpoints, Moebius coefficients) is always stored exactly and lifted into
//! the backend on demand.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::interval_dynamics::Moebius;

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `p/q`, an integer, or a finite decimal such as `-0.375`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let err = || Error::ParseRational(text.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{}{}", if whole_digits.is_empty() { "0" } else { whole_digits }, frac);
        let numer: BigInt = digits.parse().map_err(|_| err())?;
        let denom = num_traits::pow(BigInt::from(10u32), frac.len());
        let value = Rational::new(numer, denom);
        return Ok(if negative { -value } else { value });
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(n))
}

/// `p/q`, or `p` for integers.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn rational_to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact square root of a nonnegative rational, when it is rational.
pub fn rational_sqrt(value: &Rational) -> Option<Rational> {
    if value.is_negative() {
        return None;
    }
    let n = value.numer().sqrt();
    if &(&n * &n) != value.numer() {
        return None;
    }
    let d = value.denom().sqrt();
    if &(&d * &d) != value.denom() {
        return None;
    }
    Some(Rational::new(n, d))
}

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_rational(value: &Rational) -> Self;
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn as_f64(&self) -> f64;
    fn describe(&self) -> String;

    fn from_u64(value: u64) -> Self {
        Self::from_rational(&Rational::from_integer(value.into()))
    }

    /// Moebius coefficients `[a, b, c, d]` lifted into this backend.
    fn coeffs(map: &Moebius) -> [Self; 4];

    fn magnitude(&self) -> Self {
        if *self < Self::nil() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn powu(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::unit();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            exp >>= 1;
            if exp > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn total<I: IntoIterator<Item = Self>>(values: I) -> Self {
        values.into_iter().fold(Self::nil(), |acc, v| acc + v)
    }

    /// Same order as `PartialOrd`, possibly cheaper.
    fn order(&self, other: &Self) -> Option<Ordering> {
        self.partial_cmp(other)
    }

    fn order_rational(&self, r: &Rational) -> Option<Ordering> {
        self.order(&Self::from_rational(r))
    }

    /// `(a x + b) / (c x + d)` for `m = [a, b, c, d]`; `None` at the pole.
    fn mobius(m: &[Self; 4], x: &Self) -> Option<Self> {
        let den = m[2].clone() * x.clone() + m[3].clone();
        if den.is_nil() {
            return None;
        }
        Some((m[0].clone() * x.clone() + m[1].clone()) / den)
    }

    /// `(ad - bc) / (c x + d)^2`; `None` at the pole.
    fn mobius_slope(m: &[Self; 4], x: &Self) -> Option<Self> {
        let den = m[2].clone() * x.clone() + m[3].clone();
        if den.is_nil() {
            return None;
        }
        let det = m[0].clone() * m[3].clone() - m[1].clone() * m[2].clone();
        Some(det / (den.clone() * den))
    }
}

pub(crate) fn le<S: Scalar>(a: &S, b: &S) -> bool {
    matches!(a.order(b), Some(Ordering::Less | Ordering::Equal))
}

pub(crate) fn lt<S: Scalar>(a: &S, b: &S) -> bool {
    a.order(b) == Some(Ordering::Less)
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(value: &Rational) -> Self {
        rational_to_f64(value)
    }
    fn from_u64(value: u64) -> Self {
        value as f64
    }
    fn nil() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn is_nil(&self) -> bool {
        *self == 0.0
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn describe(&self) -> String {
        format!("{self:e}")
    }
    fn coeffs(map: &Moebius) -> [Self; 4] {
        map.approx()
    }
    fn magnitude(&self) -> Self {
        f64::abs(*self)
    }

    /// Neumaier compensated summation.
    fn total<I: IntoIterator<Item = Self>>(values: I) -> Self {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for v in values {
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn as_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn describe(&self) -> String {
        format_rational(self)
    }
    fn coeffs(map: &Moebius) -> [Self; 4] {
        map.exact().clone()
    }
    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }

    // denominators are positive, so cross multiplication avoids the
    // division-based comparison of the rational type
    fn order(&self, other: &Self) -> Option<Ordering> {
        if self.denom() == other.denom() {
            return Some(self.numer().cmp(other.numer()));
        }
        Some((self.numer() * other.denom()).cmp(&(other.numer() * self.denom())))
    }

    fn order_rational(&self, r: &Rational) -> Option<Ordering> {
        self.order(r)
    }

    fn mobius(m: &[Self; 4], x: &Self) -> Option<Self> {
        with_integer_coeffs(m, |[a, b, c, d]| {
            let (p, q) = (x.numer(), x.denom());
            let den = c * p + d * q;
            (!den.is_zero()).then(|| Rational::new(a * p + b * q, den))
        })
    }

    fn mobius_slope(m: &[Self; 4], x: &Self) -> Option<Self> {
        with_integer_coeffs(m, |[a, b, c, d]| {
            let (p, q) = (x.numer(), x.denom());
            let den = c * p + d * q;
            (!den.is_zero()).then(|| Rational::new((a * d - b * c) * q * q, &den * &den))
        })
    }
}

/// Runs `f` on integer coefficients proportional to `m`. Both the value and the
/// slope of a Moebius map are unchanged by scaling its coefficients.
fn with_integer_coeffs<T>(m: &[Rational; 4], f: impl FnOnce([&BigInt; 4]) -> T) -> T {
    if m.iter().all(|c| c.denom().is_one()) {
        return f([m[0].numer(), m[1].numer(), m[2].numer(), m[3].numer()]);
    }
    let l = m.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let s: Vec<BigInt> = m.iter().map(|c| c.numer() * (&l / c.denom())).collect();
    f([&s[0], &s[1], &s[2], &s[3]])
}
