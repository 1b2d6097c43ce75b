use std::fmt;

use num_traits::{One, Zero};

use crate::error::Result;
use crate::interval_dynamics::Moebius;
use crate::scalar::{format_rational, rat, Rational, Scalar};

/// Closed-form functions whose compositions evaluate without interpolation.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// `c_0 + c_1 x + c_2 x^2 + ...`
    Poly(Vec<Rational>),
    /// `χ_[lo, hi)`
    Indicator { lo: Rational, hi: Rational },
    Moebius(Moebius),
}

impl TestFunction {
    pub fn constant(c: Rational) -> Self {
        TestFunction::Poly(vec![c])
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![Rational::zero(); k + 1];
        c[k] = Rational::one();
        TestFunction::Poly(c)
    }

    pub fn eval<S: Scalar>(&self, x: &S) -> Result<S> {
        match self {
            TestFunction::Poly(c) => Ok(c.iter().rev().fold(S::nil(), |acc, a| acc * x.clone() + S::from_rational(a))),
            TestFunction::Indicator { lo, hi } => {
                let inside = *x >= S::from_rational(lo) && *x < S::from_rational(hi);
                Ok(if inside { S::unit() } else { S::nil() })
            }
            TestFunction::Moebius(m) => m.eval(x),
        }
    }
}

/// `{1, x, x^2, χ_[0,1/2), 1/(x+1)}`.
pub fn standard_test_functions() -> Vec<TestFunction> {
    vec![
        TestFunction::constant(Rational::one()),
        TestFunction::monomial(1),
        TestFunction::monomial(2),
        TestFunction::Indicator { lo: Rational::zero(), hi: rat(1, 2) },
        TestFunction::Moebius(Moebius::ints(0, 1, 1, 1)),
    ]
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Poly(c) => {
                let mut parts = Vec::new();
                for (k, a) in c.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
                    let coeff = if a.is_one() && k > 0 { String::new() } else { format_rational(a) };
                    parts.push(match k {
                        0 => coeff,
                        1 => format!("{coeff}x"),
                        _ => format!("{coeff}x^{k}"),
                    });
                }
                if parts.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", parts.join(" + "))
                }
            }
            TestFunction::Indicator { lo, hi } => write!(f, "chi[{},{})", format_rational(lo), format_rational(hi)),
            TestFunction::Moebius(m) => {
                let [a, b, c, d] = m.exact();
                let (num, den) = (linear(a, b), linear(c, d));
                let wrap = |s: String| if s.contains('+') || s.contains('-') { format!("({s})") } else { s };
                if den == "1" {
                    write!(f, "{num}")
                } else {
                    write!(f, "{}/{}", wrap(num), wrap(den))
                }
            }
        }
    }
}

/// `a x + b` written compactly.
fn linear(a: &Rational, b: &Rational) -> String {
    let slope = if a.is_zero() {
        String::new()
    } else if a.is_one() {
        "x".to_string()
    } else if *a == -Rational::one() {
        "-x".to_string()
    } else {
        format!("{}x", format_rational(a))
    };
    match (slope.is_empty(), b.is_zero()) {
        (true, _) => format_rational(b),
        (false, true) => slope,
        (false, false) if *b < Rational::zero() => format!("{slope}{}", format_rational(b)),
        (false, false) => format!("{slope}+{}", format_rational(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_values() {
        let names: Vec<String> = standard_test_functions().iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["1", "x", "x^2", "chi[0,1/2)", "1/(x+1)"]);
        let x = rat(1, 3);
        let vals: Vec<Rational> = standard_test_functions().iter().map(|t| t.eval(&x).unwrap()).collect();
        assert_eq!(vals, vec![rat(1, 1), rat(1, 3), rat(1, 9), rat(1, 1), rat(3, 4)]);
        assert_eq!(standard_test_functions()[3].eval(&rat(1, 2)).unwrap(), rat(0, 1));
    }
}
