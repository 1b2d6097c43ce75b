use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval_dynamics::Interval;
use crate::scalar::{format_rational, int, rational_to_f64, Rational, Scalar};

/// Coefficients `[a, b, c, d]` of `x -> (a x + b) / (c x + d)` in some backend.
pub type Coeffs<S> = [S; 4];

pub(crate) fn eval_coeffs<S: Scalar>(m: &Coeffs<S>, x: &S) -> Result<S> {
    S::mobius(m, x).ok_or_else(|| Error::Pole(x.describe()))
}

pub(crate) fn derivative_coeffs<S: Scalar>(m: &Coeffs<S>, x: &S) -> Result<S> {
    S::mobius_slope(m, x).ok_or_else(|| Error::Pole(x.describe()))
}

pub(crate) fn mul_coeffs<S: Scalar>(p: &Coeffs<S>, q: &Coeffs<S>) -> Coeffs<S> {
    [
        p[0].clone() * q[0].clone() + p[1].clone() * q[2].clone(),
        p[0].clone() * q[1].clone() + p[1].clone() * q[3].clone(),
        p[2].clone() * q[0].clone() + p[3].clone() * q[2].clone(),
        p[2].clone() * q[1].clone() + p[3].clone() * q[3].clone(),
    ]
}

pub(crate) fn pow_coeffs<S: Scalar>(m: &Coeffs<S>, mut exp: u64) -> Coeffs<S> {
    let mut acc = [S::unit(), S::nil(), S::nil(), S::unit()];
    let mut base = m.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_coeffs(&acc, &base);
        }
        exp >>= 1;
        if exp > 0 {
            base = mul_coeffs(&base, &base);
        }
    }
    acc
}

pub(crate) fn inverse_coeffs<S: Scalar>(m: &Coeffs<S>) -> Coeffs<S> {
    [m[3].clone(), -m[1].clone(), -m[2].clone(), m[0].clone()]
}

/// Endpoints of the image of `[lo, hi]`, sorted. The caller guarantees no pole.
pub(crate) fn image_coeffs<S: Scalar>(m: &Coeffs<S>, lo: &S, hi: &S) -> Result<(S, S)> {
    let p = eval_coeffs(m, lo)?;
    let q = eval_coeffs(m, hi)?;
    Ok(if p <= q { (p, q) } else { (q, p) })
}

/// An invertible linear-fractional map `x -> (a x + b) / (c x + d)` with exact
/// coefficients. Composition is the 2x2 matrix product.
#[derive(Clone, Debug)]
pub struct Moebius {
    exact: [Rational; 4],
    approx: [f64; 4],
}

impl PartialEq for Moebius {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Eq for Moebius {}

impl Moebius {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Result<Self> {
        Self::from_coeffs([a, b, c, d])
    }

    pub fn from_coeffs(exact: [Rational; 4]) -> Result<Self> {
        let det = &exact[0] * &exact[3] - &exact[1] * &exact[2];
        if det.is_zero() {
            return Err(Error::SingularMoebius);
        }
        let approx = [
            rational_to_f64(&exact[0]),
            rational_to_f64(&exact[1]),
            rational_to_f64(&exact[2]),
            rational_to_f64(&exact[3]),
        ];
        Ok(Moebius { exact, approx })
    }

    /// Integer coefficients; panics on a singular matrix.
    pub fn ints(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::new(int(a), int(b), int(c), int(d)).expect("nonsingular integer Moebius map")
    }

    /// `x -> slope x + intercept`.
    pub fn affine(slope: Rational, intercept: Rational) -> Result<Self> {
        Self::new(slope, intercept, int(0), int(1))
    }

    pub fn identity() -> Self {
        Self::ints(1, 0, 0, 1)
    }

    pub fn exact(&self) -> &[Rational; 4] {
        &self.exact
    }

    pub fn approx(&self) -> [f64; 4] {
        self.approx
    }

    pub fn det(&self) -> Rational {
        &self.exact[0] * &self.exact[3] - &self.exact[1] * &self.exact[2]
    }

    pub fn is_affine(&self) -> bool {
        self.exact[2].is_zero()
    }

    pub fn eval<S: Scalar>(&self, x: &S) -> Result<S> {
        eval_coeffs(&S::coeffs(self), x)
    }

    /// `(ad - bc) / (cx + d)^2`.
    pub fn derivative<S: Scalar>(&self, x: &S) -> Result<S> {
        derivative_coeffs(&S::coeffs(self), x)
    }

    pub fn inverse(&self) -> Moebius {
        let [a, b, c, d] = &self.exact;
        Moebius::from_coeffs([d.clone(), -b.clone(), -c.clone(), a.clone()]).expect("inverse of a nonsingular map")
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Moebius) -> Moebius {
        Moebius::from_coeffs(mul_coeffs(&self.exact, &inner.exact)).expect("product of nonsingular maps")
    }

    pub fn pow(&self, exp: u64) -> Moebius {
        Moebius::from_coeffs(pow_coeffs(&self.exact, exp)).expect("power of a nonsingular map")
    }

    /// Equality as maps: coefficient vectors proportional.
    pub fn projectively_eq(&self, other: &Moebius) -> bool {
        let p = &self.exact;
        let q = &other.exact;
        (0..4).all(|i| (i + 1..4).all(|j| &p[i] * &q[j] == &p[j] * &q[i]))
    }

    pub fn pole(&self) -> Option<Rational> {
        let [_, _, c, d] = &self.exact;
        (!c.is_zero()).then(|| -d / c)
    }

    pub fn has_pole_in(&self, domain: &Interval) -> bool {
        self.pole().is_some_and(|p| domain.contains(&p))
    }

    /// Orientation on any pole-free interval.
    pub fn is_increasing(&self) -> bool {
        self.det().is_positive()
    }

    pub fn image(&self, domain: &Interval) -> Result<Interval> {
        if let Some(p) = self.pole().filter(|p| domain.contains(p)) {
            return Err(Error::Pole(format_rational(&p)));
        }
        let p = self.eval(domain.lo())?;
        let q = self.eval(domain.hi())?;
        Ok(Interval::spanning(p, q).expect("injective map sends an interval to an interval"))
    }

    /// `sup |f'|` over a pole-free interval.
    pub fn sup_abs_derivative(&self, domain: &Interval) -> Result<Rational> {
        let p: Rational = self.derivative(domain.lo())?;
        let q: Rational = self.derivative(domain.hi())?;
        // |det| / (cx+d)^2 is monotone between the endpoints when no pole lies inside
        Ok(p.abs().max(q.abs()))
    }

    pub fn is_identity(&self) -> bool {
        self.projectively_eq(&Moebius::identity())
    }

    pub fn coefficient_strings(&self) -> [String; 4] {
        self.exact.clone().map(|r| format_rational(&r))
    }

    pub(crate) fn one_is_denominator(&self) -> bool {
        self.exact[2].is_zero() && self.exact[3].is_one()
    }
}

impl fmt::Display for Moebius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.coefficient_strings();
        if self.one_is_denominator() {
            write!(f, "x -> {a}*x + {b}")
        } else {
            write!(f, "x -> ({a}*x + {b})/({c}*x + {d})")
        }
    }
}

/// A Moebius map restricted to a closed interval containing no pole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoebiusBranch {
    map: Moebius,
    domain: Interval,
}

impl MoebiusBranch {
    pub fn new(map: Moebius, domain: Interval) -> Result<Self> {
        if let Some(p) = map.pole().filter(|p| domain.contains(p)) {
            return Err(Error::Pole(format_rational(&p)));
        }
        Ok(MoebiusBranch { map, domain })
    }

    /// Skips the pole check; only for exercising validation.
    #[cfg(test)]
    pub(crate) fn unchecked(map: Moebius, domain: Interval) -> Self {
        MoebiusBranch { map, domain }
    }

    pub fn map(&self) -> &Moebius {
        &self.map
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn range(&self) -> Interval {
        self.map.image(&self.domain).expect("pole-free by construction")
    }

    pub fn eval<S: Scalar>(&self, x: &S) -> Result<S> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(x.describe()));
        }
        self.map.eval(x)
    }

    pub fn derivative<S: Scalar>(&self, x: &S) -> Result<S> {
        if !self.domain.contains(x) {
            return Err(Error::NonDifferentiable(x.describe()));
        }
        self.map.derivative(x)
    }

    /// The unique `x` in the domain with `branch(x) = y`.
    pub fn invert<S: Scalar>(&self, y: &S) -> Result<S> {
        if !self.range().contains(y) {
            return Err(Error::OutOfRange(y.describe()));
        }
        self.map.inverse().eval(y)
    }
}
