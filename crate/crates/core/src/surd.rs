//! Exact sums of square roots of rationals.
//!
//! Isometry factors such as `sqrt|T'(x)|` are square roots of rationals at
//! rational points. A [`Surd`] keeps them exact: it is a finite sum
//! `c_1 sqrt(r_1) + ... + c_n sqrt(r_n)` whose radicands are pairwise
//! incommensurable (no ratio `r_i / r_j` is a rational square). Square roots
//! of pairwise incommensurable rationals are linearly independent over the
//! rationals, so a surd is zero exactly when it has no terms.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{format_rational, rational_sqrt, rational_to_f64, Rational};

#[derive(Clone, Debug, Default)]
pub struct Surd {
    /// `(coefficient, radicand)`; radicands are positive integers.
    terms: Vec<(Rational, BigInt)>,
}

impl Surd {
    pub fn zero() -> Self {
        Surd { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Surd::from_rational(Rational::one())
    }

    pub fn from_rational(value: Rational) -> Self {
        let mut s = Surd::zero();
        s.push(value, BigInt::one());
        s
    }

    /// `sqrt(|value|)`.
    pub fn sqrt_abs(value: &Rational) -> Self {
        let value = value.abs();
        if value.is_zero() {
            return Surd::zero();
        }
        if let Some(root) = rational_sqrt(&value) {
            return Surd::from_rational(root);
        }
        // sqrt(n/d) = sqrt(n d) / d
        let radicand = value.numer() * value.denom();
        let coeff = Rational::new(BigInt::one(), value.denom().clone());
        let mut s = Surd::zero();
        s.push(coeff, radicand);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The rational value when the surd has no irrational part.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(c, r)] if r.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(c, r)| rational_to_f64(c) * rational_to_f64(&Rational::from_integer(r.clone())).sqrt())
            .sum()
    }

    /// Squares of surds with a single term are rational.
    pub fn square(&self) -> Surd {
        self.clone() * self.clone()
    }

    fn push(&mut self, coeff: Rational, radicand: BigInt) {
        if coeff.is_zero() {
            return;
        }
        let (coeff, radicand) = reduce(coeff, radicand);
        for i in 0..self.terms.len() {
            let ratio = Rational::new(radicand.clone(), self.terms[i].1.clone());
            if let Some(q) = rational_sqrt(&ratio) {
                let merged = &self.terms[i].0 + &coeff * q;
                if merged.is_zero() {
                    self.terms.swap_remove(i);
                } else {
                    self.terms[i].0 = merged;
                }
                return;
            }
        }
        self.terms.push((coeff, radicand));
    }
}

/// Pulls small square factors out of the radicand.
fn reduce(mut coeff: Rational, mut radicand: BigInt) -> (Rational, BigInt) {
    for p in [2u32, 3, 5, 7, 11, 13] {
        let sq = BigInt::from(p * p);
        while radicand.is_multiple_of(&sq) {
            radicand /= &sq;
            coeff *= Rational::from_integer(BigInt::from(p));
        }
    }
    if let Some(root) = rational_sqrt(&Rational::from_integer(radicand.clone())) {
        return (coeff * root, BigInt::one());
    }
    (coeff, radicand)
}

impl PartialEq for Surd {
    fn eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_zero()
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(mut self, rhs: Surd) -> Surd {
        for (c, r) in rhs.terms {
            self.push(c, r);
        }
        self
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            terms: self.terms.into_iter().map(|(c, r)| (-c, r)).collect(),
        }
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        self + (-rhs)
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let mut out = Surd::zero();
        for (c1, r1) in &self.terms {
            for (c2, r2) in &rhs.terms {
                out.push(c1 * c2, r1 * r2);
            }
        }
        out
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, r)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if r.is_one() {
                write!(f, "{}", format_rational(c))?;
            } else {
                write!(f, "{}*sqrt({})", format_rational(c), r)?;
            }
        }
        Ok(())
    }
}
