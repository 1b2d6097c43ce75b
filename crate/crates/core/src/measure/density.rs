//! Closed-form densities `scale * prod (x + c)^e`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval_dynamics::{Interval, Moebius};
use crate::scalar::{format_rational, int, rational_to_f64, Rational, Scalar};

/// A float normalization constant with the exact expression it stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub value: f64,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    scale: Rational,
    /// `c -> e` for the factor `(x + c)^e`; exponents are never zero.
    factors: BTreeMap<Rational, i32>,
    normalization: Option<Normalization>,
    integrable: bool,
}

impl Density {
    pub fn new(scale: Rational, factors: impl IntoIterator<Item = (Rational, i32)>) -> Result<Self> {
        if scale.is_zero() {
            return Err(Error::InvalidConfig("density scale must be nonzero".into()));
        }
        let mut map = BTreeMap::new();
        for (c, e) in factors {
            *map.entry(c).or_insert(0) += e;
        }
        map.retain(|_, e| *e != 0);
        Ok(Density { scale, factors: map, normalization: None, integrable: true })
    }

    pub fn with_normalization(mut self, value: f64, tag: &str) -> Self {
        self.normalization = Some(Normalization { value, tag: tag.to_string() });
        self
    }

    pub fn with_integrable(mut self, integrable: bool) -> Self {
        self.integrable = integrable;
        self
    }

    /// Sets the integrable flag from the poles on `ambient`.
    pub fn checked_against(mut self, ambient: &Interval) -> Self {
        self.integrable = self.pole_in(ambient).is_none();
        self
    }

    pub fn constant(value: Rational) -> Result<Self> {
        Self::new(value, [])
    }

    /// Lebesgue density `1`.
    pub fn lebesgue() -> Self {
        Self::new(int(1), []).expect("nonzero").with_normalization(1.0, "1")
    }

    /// Gauss density `1 / (log 2 (x + 1))`.
    pub fn gauss() -> Self {
        Self::new(int(1), [(int(1), -1)])
            .expect("nonzero")
            .with_normalization(1.0 / std::f64::consts::LN_2, "1/log(2)")
    }

    /// `1/x`, infinite on `[0, 1]`.
    pub fn theta() -> Self {
        Self::new(int(1), [(int(0), -1)]).expect("nonzero").with_integrable(false)
    }

    /// `1 / (log(4/3) (x + 1)(x + 2))`.
    pub fn mu2() -> Self {
        Self::new(int(1), [(int(1), -1), (int(2), -1)])
            .expect("nonzero")
            .with_normalization(1.0 / (4.0f64 / 3.0).ln(), "1/log(4/3)")
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn factors(&self) -> &BTreeMap<Rational, i32> {
        &self.factors
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    pub fn integrable(&self) -> bool {
        self.integrable
    }

    /// The unnormalized form at `x`.
    pub fn eval<S: Scalar>(&self, x: &S) -> Result<S> {
        self.lift().eval(x)
    }

    /// The coefficients converted once into backend `S`, for repeated evaluation.
    pub(crate) fn lift<S: Scalar>(&self) -> LiftedDensity<S> {
        LiftedDensity {
            scale: S::from_rational(&self.scale),
            factors: self.factors.iter().map(|(c, &e)| (S::from_rational(c), e)).collect(),
        }
    }

    /// Normalized value in floating point (unnormalized when no constant is set).
    pub fn eval_normalized(&self, x: f64) -> Result<f64> {
        Ok(self.eval(&x)? * self.normalization.as_ref().map_or(1.0, |n| n.value))
    }

    /// A pole `-c` with negative exponent inside `interval`.
    pub fn pole_in(&self, interval: &Interval) -> Option<Rational> {
        self.factors.iter().filter(|(_, &e)| e < 0).map(|(c, _)| -c).find(|p| interval.contains(p))
    }

    /// Upper bound of the unnormalized form on `interval`; each factor is monotone
    /// in absolute value off its zero, so endpoint maxima multiply to a bound.
    pub fn sup_on(&self, interval: &Interval) -> Option<Rational> {
        if self.pole_in(interval).is_some() {
            return None;
        }
        let mut acc = self.scale.abs();
        for (c, &e) in &self.factors {
            let lo = (interval.lo() + c).abs();
            let hi = (interval.hi() + c).abs();
            let pick = if e > 0 { lo.max(hi) } else { lo.min(hi) };
            let p = num_traits::pow(pick, e.unsigned_abs() as usize);
            acc = if e > 0 { acc * p } else { acc / p };
        }
        Some(acc)
    }

    /// `|m'(x)| * self(m(x))`, which stays in this family of closed forms.
    pub fn pullback(&self, m: &Moebius) -> Density {
        let [a, b, c, d] = m.exact();
        let mut scale = self.scale.clone() * m.det().abs();
        let mut factors: Vec<(Rational, i32)> = Vec::new();
        // (x + k) ∘ m = ((a + k c) x + (b + k d)) / (c x + d)
        let mut push_linear = |alpha: Rational, beta: Rational, e: i32, scale: &mut Rational| {
            if alpha.is_zero() {
                *scale *= pow_signed(&beta, e);
            } else {
                *scale *= pow_signed(&alpha, e);
                factors.push((beta / alpha, e));
            }
        };
        let mut den_power = -2;
        for (k, &e) in &self.factors {
            push_linear(a + k * c, b + k * d, e, &mut scale);
            den_power -= e;
        }
        push_linear(c.clone(), d.clone(), den_power, &mut scale);
        let mut out = Density::new(scale, factors).expect("pullback of a nonzero density");
        out.integrable = self.integrable;
        out
    }

    /// Equal up to a positive constant.
    pub fn projectively_eq(&self, other: &Density) -> bool {
        self.factors == other.factors && self.scale.is_positive() == other.scale.is_positive()
    }

    /// `other = ratio * self`, when projectively equal.
    pub fn ratio_to(&self, other: &Density) -> Option<Rational> {
        self.projectively_eq(other).then(|| &other.scale / &self.scale)
    }

    /// `∫_lo^hi` of the unnormalized form, exact up to the final logarithms.
    pub fn integral(&self, lo: &Rational, hi: &Rational) -> Result<f64> {
        if lo == hi {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
        let span = Interval::new(lo.clone(), hi.clone())?;
        if let Some(p) = self.pole_in(&span) {
            return Err(Error::QuadratureFailure(format!(
                "{} has a pole at {} inside {span}",
                self,
                format_rational(&p)
            )));
        }
        let mut num = vec![self.scale.clone()];
        let mut den = vec![Rational::one()];
        for (c, &e) in &self.factors {
            let lin = vec![c.clone(), Rational::one()];
            for _ in 0..e.unsigned_abs() {
                if e > 0 {
                    num = poly_mul(&num, &lin);
                } else {
                    den = poly_mul(&den, &lin);
                }
            }
        }
        let (quot, rem) = poly_divrem(&num, &den);
        let mut exact = poly_antiderivative_between(&quot, lo, hi);
        let mut logs = Vec::new();
        for (c, &e) in self.factors.iter().filter(|(_, &e)| e < 0) {
            let m = e.unsigned_abs() as usize;
            let coeffs = principal_part(&rem, &den, c, m);
            for (j, a) in coeffs.iter().enumerate() {
                let power = j + 1;
                if a.is_zero() {
                    continue;
                }
                if power == 1 {
                    let ratio = ((hi + c) / (lo + c)).abs();
                    logs.push(rational_to_f64(a) * log_rational(&ratio));
                } else {
                    // ∫ (x+c)^-p = (x+c)^(1-p) / (1-p)
                    let k = 1 - power as i32;
                    let f = |x: &Rational| pow_signed(&(x + c), k) / int(k as i64);
                    exact += a * (f(hi) - f(lo));
                }
            }
        }
        logs.push(rational_to_f64(&exact));
        Ok(sign * f64::total(logs))
    }

    /// Normalized integral over `[lo, hi]`.
    pub fn integral_normalized(&self, lo: &Rational, hi: &Rational) -> Result<f64> {
        Ok(self.integral(lo, hi)? * self.normalization.as_ref().map_or(1.0, |n| n.value))
    }

    /// A human-readable formula such as `1/((x+1)(x+2))`.
    pub fn formula(&self) -> String {
        let mut num = String::new();
        let mut den = String::new();
        for (c, &e) in &self.factors {
            let base = if c.is_zero() {
                "x".to_string()
            } else if c.is_negative() {
                format!("(x-{})", format_rational(&-c))
            } else {
                format!("(x+{})", format_rational(c))
            };
            let term = if e.abs() == 1 { base } else { format!("{base}^{}", e.abs()) };
            if e > 0 {
                num.push_str(&term);
            } else {
                den.push_str(&term);
            }
        }
        let scale = format_rational(&self.scale);
        let num = match (num.is_empty(), self.scale.is_one()) {
            (true, _) => scale,
            (false, true) => num,
            (false, false) => format!("{scale}*{num}"),
        };
        let num = if num.contains('/') && !den.is_empty() { format!("({num})") } else { num };
        if den.is_empty() {
            num
        } else if self.factors.values().filter(|e| **e < 0).count() > 1 {
            format!("{num}/({den})")
        } else {
            format!("{num}/{den}")
        }
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.normalization {
            Some(n) if n.tag != "1" => write!(f, "{} * {}", n.tag, self.formula()),
            _ => write!(f, "{}", self.formula()),
        }
    }
}

fn pow_signed(x: &Rational, e: i32) -> Rational {
    let p = num_traits::pow(x.clone(), e.unsigned_abs() as usize);
    if e >= 0 {
        p
    } else {
        Rational::one() / p
    }
}

/// `ln` of a positive rational without overflowing `f64`.
fn log_rational(r: &Rational) -> f64 {
    let n = r.numer().bits() as i64;
    let d = r.denom().bits() as i64;
    let shift = n - d;
    if shift.abs() < 900 {
        return rational_to_f64(r).ln();
    }
    let scaled = if shift > 0 {
        r / Rational::from_integer(num_bigint::BigInt::one() << shift as usize)
    } else {
        r * Rational::from_integer(num_bigint::BigInt::one() << (-shift) as usize)
    };
    rational_to_f64(&scaled).ln() + shift as f64 * std::f64::consts::LN_2
}

type Poly = Vec<Rational>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn poly_mul(p: &[Rational], q: &[Rational]) -> Poly {
    let mut out = vec![Rational::zero(); p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    trim(out)
}

fn poly_divrem(num: &[Rational], den: &[Rational]) -> (Poly, Poly) {
    let den = trim(den.to_vec());
    let mut rem = trim(num.to_vec());
    let dl = den.len();
    if rem.len() < dl {
        return (vec![Rational::zero()], rem);
    }
    let lead = den[dl - 1].clone();
    let mut quot = vec![Rational::zero(); rem.len() - dl + 1];
    for k in (0..quot.len()).rev() {
        let coef = &rem[k + dl - 1] / &lead;
        for (j, d) in den.iter().enumerate() {
            rem[k + j] -= &coef * d;
        }
        quot[k] = coef;
    }
    rem.truncate(dl - 1);
    if rem.is_empty() {
        rem.push(Rational::zero());
    }
    (trim(quot), trim(rem))
}

/// `p(t - c)` as a polynomial in `t`.
fn poly_shift(p: &[Rational], c: &Rational) -> Poly {
    // Horner in the shifted variable
    let lin = vec![-c.clone(), Rational::one()];
    let mut acc = vec![Rational::zero()];
    for a in p.iter().rev() {
        acc = poly_mul(&acc, &lin);
        acc[0] += a;
    }
    trim(acc)
}

fn poly_antiderivative_between(p: &[Rational], lo: &Rational, hi: &Rational) -> Rational {
    let f = |x: &Rational| {
        let mut acc = Rational::zero();
        for (k, a) in p.iter().enumerate().rev() {
            acc = acc * x + a / int(k as i64 + 1);
        }
        acc * x
    };
    f(hi) - f(lo)
}

/// Coefficients `A_1..A_m` of `A_j / (x + c)^j` in the partial fraction of `rem / den`,
/// where `(x + c)^m` exactly divides `den`.
fn principal_part(rem: &[Rational], den: &[Rational], c: &Rational, m: usize) -> Vec<Rational> {
    let mut other = den.to_vec();
    let lin = vec![c.clone(), Rational::one()];
    for _ in 0..m {
        let (q, _) = poly_divrem(&other, &lin);
        other = q;
    }
    // series in t = x + c of rem / other, first m coefficients
    let r = poly_shift(rem, c);
    let q = poly_shift(&other, c);
    let coeff = |p: &Poly, k: usize| p.get(k).cloned().unwrap_or_else(Rational::zero);
    let mut series: Vec<Rational> = Vec::with_capacity(m);
    for k in 0..m {
        let mut s = coeff(&r, k);
        for (j, sj) in series.iter().enumerate() {
            s -= sj * coeff(&q, k - j);
        }
        series.push(s / &q[0]);
    }
    // series[k] multiplies t^k / t^m = t^-(m-k)
    let mut out = vec![Rational::zero(); m];
    for (k, s) in series.into_iter().enumerate() {
        out[m - k - 1] = s;
    }
    out
}

pub(crate) struct LiftedDensity<S> {
    scale: S,
    factors: Vec<(S, i32)>,
}

impl<S: Scalar> LiftedDensity<S> {
    pub(crate) fn eval(&self, x: &S) -> Result<S> {
        let mut acc = self.scale.clone();
        for (c, e) in &self.factors {
            let base = x.clone() + c.clone();
            if *e < 0 && base.is_nil() {
                return Err(Error::Pole(x.describe()));
            }
            let p = base.powu(e.unsigned_abs() as u64);
            acc = if *e > 0 { acc * p } else { acc / p };
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn evaluation() {
        assert_eq!(Density::gauss().eval(&int(1)).unwrap(), rat(1, 2));
        assert_eq!(Density::mu2().eval(&int(0)).unwrap(), rat(1, 2));
        assert!(matches!(Density::theta().eval(&int(0)), Err(Error::Pole(_))));
    }

    #[test]
    fn normalized_masses_are_one() {
        for d in [Density::lebesgue(), Density::gauss(), Density::mu2()] {
            let m = d.integral_normalized(&int(0), &int(1)).unwrap();
            assert!((m - 1.0).abs() < 1e-14, "{d}: {m}");
        }
        assert!(Density::theta().integral(&int(0), &int(1)).is_err());
    }

    #[test]
    fn integrals_with_repeated_and_positive_factors() {
        // ∫_0^1 x^2/(x+1)^2 = 3/2 - 2 ln 2
        let d = Density::new(int(1), [(int(0), 2), (int(1), -2)]).unwrap();
        let expected = 1.5 - 2.0 * std::f64::consts::LN_2;
        assert!((d.integral(&int(0), &int(1)).unwrap() - expected).abs() < 1e-15);
        // ∫_1/2^1 1/x = ln 2, reversed limits flip the sign
        assert!((Density::theta().integral(&int(1), &rat(1, 2)).unwrap() + std::f64::consts::LN_2).abs() < 1e-15);
        // ∫_0^1 (x+1)^3 = 15/4
        let cube = Density::new(int(1), [(int(1), 3)]).unwrap();
        assert_eq!(cube.integral(&int(0), &int(1)).unwrap(), 3.75);
    }

    #[test]
    fn pullbacks_of_catalog_densities() {
        let f1 = Moebius::ints(0, 1, 1, 1);
        // θ pulled back by 1/(x+1) is 1/(x+1)
        let p = Density::theta().pullback(&f1);
        assert_eq!(p, Density::new(int(1), [(int(1), -1)]).unwrap().with_integrable(false));
        // γ pulled back is 1/((x+1)(x+2)) up to scale
        let p = Density::new(int(1), [(int(1), -1)]).unwrap().pullback(&f1);
        assert!(p.projectively_eq(&Density::mu2()));
        // the tent branch has slope -1/2
        let t1 = Moebius::new(rat(-1, 2), int(1), int(0), int(1)).unwrap();
        assert_eq!(Density::lebesgue().pullback(&t1).formula(), "1/2");
    }

    #[test]
    fn sup_bounds() {
        assert_eq!(Density::mu2().sup_on(&Interval::unit()), Some(rat(1, 2)));
        assert_eq!(Density::theta().sup_on(&Interval::unit()), None);
    }

    #[test]
    fn formulas() {
        assert_eq!(Density::mu2().formula(), "1/((x+1)(x+2))");
        assert_eq!(Density::theta().formula(), "1/x");
        assert_eq!(Density::lebesgue().formula(), "1");
        assert_eq!(Density::gauss().to_string(), "1/log(2) * 1/(x+1)");
    }
}
