//! Countable families of Moebius branches `g_1, g_2, ...` generated by a rule.

use num_traits::{One, Signed, Zero};

use crate::interval_dynamics::moebius::{image_coeffs, mul_coeffs, pow_coeffs, Coeffs};
use crate::interval_dynamics::{Interval, Moebius};
use crate::scalar::{int, le, lt, rational_sqrt, Rational, Scalar};

/// Generator of the `k`-th branch (`k >= 1`) of a countable branch family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchRule {
    /// `g_k(x) = base(x + (k - 1) * shift)`.
    Harmonic { base: Moebius, shift: Rational },
    /// `g_k(x) = ratio^(k - 1) * base(x)`.
    Geometric { base: Moebius, ratio: Rational },
    /// `g_k = second^(k - 1) ∘ first`.
    Jump { first: Moebius, second: Moebius },
}

impl BranchRule {
    pub fn kind(&self) -> &'static str {
        match self {
            BranchRule::Harmonic { .. } => "harmonic",
            BranchRule::Geometric { .. } => "geometric",
            BranchRule::Jump { .. } => "jump",
        }
    }

    /// Coefficients of `g_k` in the backend `S`.
    pub fn nth<S: Scalar>(&self, k: u64) -> Coeffs<S> {
        self.lift::<S>().nth(k)
    }

    /// The rule with its data converted once into backend `S`.
    pub fn lift<S: Scalar>(&self) -> LiftedRule<S> {
        match self {
            BranchRule::Harmonic { base, shift } => LiftedRule::Harmonic(S::coeffs(base), S::from_rational(shift)),
            BranchRule::Geometric { base, ratio } => LiftedRule::Geometric(S::coeffs(base), S::from_rational(ratio)),
            BranchRule::Jump { first, second } => LiftedRule::Jump(S::coeffs(first), S::coeffs(second)),
        }
    }

    pub fn nth_exact(&self, k: u64) -> Moebius {
        Moebius::from_coeffs(self.nth::<Rational>(k)).expect("rule branches are nonsingular")
    }

    /// Sorted endpoints of `g_k([lo, hi])`.
    pub fn range_of<S: Scalar>(&self, k: u64, lo: &S, hi: &S) -> (S, S) {
        image_coeffs(&self.nth::<S>(k), lo, hi).expect("rule branches are pole-free on the ambient interval")
    }

    /// Every branch is affine.
    pub fn is_affine(&self) -> bool {
        match self {
            BranchRule::Harmonic { base, .. } | BranchRule::Geometric { base, .. } => base.is_affine(),
            BranchRule::Jump { first, second } => first.is_affine() && second.is_affine(),
        }
    }

    /// The point the ranges `g_k(X)` shrink to, when it is rational.
    pub fn limit_point(&self) -> Option<Rational> {
        match self {
            BranchRule::Harmonic { base, shift } => {
                let [a, _, c, _] = base.exact();
                (!shift.is_zero() && !c.is_zero()).then(|| a / c)
            }
            BranchRule::Geometric { ratio, .. } => (ratio.abs() < Rational::one()).then(Rational::zero),
            BranchRule::Jump { second, .. } => attracting_fixed_point(second),
        }
    }

    /// Rigorous upper bound on `sum_{k > truncation} sup_X |g_k'|`.
    pub fn tail_derivative_bound(&self, ambient: &Interval, truncation: u64) -> Option<Rational> {
        let k = truncation;
        match self {
            BranchRule::Geometric { base, ratio } => {
                let r = ratio.abs();
                if r >= Rational::one() {
                    return None;
                }
                let sup = base.sup_abs_derivative(ambient).ok()?;
                Some(sup * r.clone().powu(k) / (Rational::one() - r))
            }
            BranchRule::Harmonic { base, shift } => {
                let [a, _, c, _] = base.exact();
                let step = [Rational::zero(), a * shift, Rational::zero(), c * shift];
                pencil_tail_bound(base.exact(), &step, ambient, k)
            }
            BranchRule::Jump { first, second } => {
                let rho = second.sup_abs_derivative(ambient).ok()?;
                if rho < Rational::one() {
                    let sup = first.sup_abs_derivative(ambient).ok()?;
                    return Some(sup * rho.clone().powu(k) / (Rational::one() - rho));
                }
                // parabolic second: M^j = λ^j (I + j N/λ) with N = M - λI nilpotent
                let [a, b, c, d] = second.exact();
                let trace = a + d;
                if &trace * &trace != int(4) * second.det() || second.is_identity() {
                    return None;
                }
                let lambda = trace / int(2);
                let n = [(a - &lambda) / &lambda, b / &lambda, c / &lambda, (d - &lambda) / &lambda];
                let step = mul_coeffs(&n, first.exact());
                pencil_tail_bound(first.exact(), &step, ambient, k)
            }
        }
    }
}

/// A [`BranchRule`] lifted into a backend, for evaluating many branches.
#[derive(Clone, Debug)]
pub enum LiftedRule<S> {
    Harmonic(Coeffs<S>, S),
    Geometric(Coeffs<S>, S),
    Jump(Coeffs<S>, Coeffs<S>),
}

impl<S: Scalar> LiftedRule<S> {
    pub fn nth(&self, k: u64) -> Coeffs<S> {
        debug_assert!(k >= 1, "branch indices start at 1");
        let steps = k - 1;
        match self {
            LiftedRule::Harmonic([a, b, c, d], shift) => {
                let t = shift.clone() * S::from_u64(steps);
                [a.clone(), a.clone() * t.clone() + b.clone(), c.clone(), c.clone() * t + d.clone()]
            }
            LiftedRule::Geometric([a, b, c, d], ratio) => {
                let r = ratio.powu(steps);
                [r.clone() * a.clone(), r * b.clone(), c.clone(), d.clone()]
            }
            LiftedRule::Jump(first, second) => mul_coeffs(&pow_coeffs(second, steps), first),
        }
    }
}

fn attracting_fixed_point(m: &Moebius) -> Option<Rational> {
    let [a, b, c, d] = m.exact();
    if c.is_zero() {
        // affine: y = (a y + b) / d
        if a == d {
            return None;
        }
        let slope = a / d;
        return (slope.abs() < Rational::one()).then(|| b / (d - a));
    }
    let disc = (d - a) * (d - a) + int(4) * b * c;
    let root = rational_sqrt(&disc)?;
    let candidates = [(a - d + &root) / (int(2) * c), (a - d - &root) / (int(2) * c)];
    candidates.into_iter().find(|y| {
        m.derivative::<Rational>(y)
            .map(|s| s.abs() <= Rational::one())
            .unwrap_or(false)
    })
}

/// Tail bound for branches `g_{j+1} = A + j B` (projectively), `j >= truncation`,
/// whose determinant does not depend on `j`.
fn pencil_tail_bound(a: &Coeffs<Rational>, b: &Coeffs<Rational>, ambient: &Interval, truncation: u64) -> Option<Rational> {
    let linear = &a[0] * &b[3] + &a[3] * &b[0] - &a[1] * &b[2] - &a[2] * &b[1];
    let quadratic = &b[0] * &b[3] - &b[1] * &b[2];
    if !linear.is_zero() || !quadratic.is_zero() {
        return None;
    }
    let det = (&a[0] * &a[3] - &a[1] * &a[2]).abs();
    let beta = |x: &Rational| &b[2] * x + &b[3];
    let alpha = |x: &Rational| &a[2] * x + &a[3];
    let (blo, bhi) = (beta(ambient.lo()), beta(ambient.hi()));
    if blo.is_zero() || bhi.is_zero() || blo.is_positive() != bhi.is_positive() {
        return None;
    }
    let beta_min = blo.abs().min(bhi.abs());
    let ratio_min = (alpha(ambient.lo()) / &blo).min(alpha(ambient.hi()) / &bhi);
    // |α + jβ| = |β| |j + α/β| >= β_min (j + r_min) for j >= K, then compare with ∫_{K-1}^∞
    let offset = Rational::from_integer(truncation.into()) - Rational::one() + ratio_min;
    if !offset.is_positive() {
        return None;
    }
    Some(det / (&beta_min * &beta_min) / offset)
}

/// Index of the family range containing `x`, choosing the lowest index at shared
/// endpoints. Ranges must be monotonically ordered; `cap` bounds the search when
/// the accumulation point is not known exactly.
pub(crate) fn locate_in_family<S: Scalar>(rule: &BranchRule, ambient: &Interval, x: &S, cap: u64) -> Option<u64> {
    let lo = S::from_rational(ambient.lo());
    let hi = S::from_rational(ambient.hi());
    let range = |k: u64| rule.range_of::<S>(k, &lo, &hi);
    let first = range(1);
    if le(&first.0, x) && le(x, &first.1) {
        return Some(1);
    }
    let second = range(2);
    let descending = le(&second.1, &first.0);
    let ascending = le(&first.1, &second.0);
    if !descending && !ascending {
        return (2..=cap.min(4096)).find(|&k| {
            let r = range(k);
            le(&r.0, x) && le(x, &r.1)
        });
    }
    if (descending && lt(&first.1, x)) || (ascending && lt(x, &first.0)) {
        return None;
    }
    let limit = rule.limit_point().map(|l| S::from_rational(&l));
    let cap = match &limit {
        Some(l) => {
            if (descending && le(x, l)) || (ascending && le(l, x)) {
                return None;
            }
            u64::MAX / 4
        }
        None => cap,
    };
    let reached = |k: u64| {
        let r = range(k);
        if descending {
            le(&r.0, x)
        } else {
            le(x, &r.1)
        }
    };
    let mut below = 1u64;
    let mut above = 2u64;
    while !reached(above) {
        if above >= cap {
            return None;
        }
        below = above;
        above = above.saturating_mul(2).min(cap);
    }
    while above - below > 1 {
        let mid = below + (above - below) / 2;
        if reached(mid) {
            above = mid;
        } else {
            below = mid;
        }
    }
    if S::EXACT {
        let r = range(above);
        (le(&r.0, x) && le(x, &r.1)).then_some(above)
    } else {
        // rounding may open hairline gaps between neighbouring ranges
        Some(above)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn gauss() -> BranchRule {
        BranchRule::Harmonic { base: Moebius::ints(0, 1, 1, 1), shift: int(1) }
    }

    #[test]
    fn harmonic_matches_reciprocal_shift() {
        for k in 1..20u64 {
            assert!(gauss().nth_exact(k).projectively_eq(&Moebius::ints(0, 1, 1, k as i64)));
        }
    }

    #[test]
    fn farey_jump_rule_is_gauss() {
        let jump = BranchRule::Jump { first: Moebius::ints(0, 1, 1, 1), second: Moebius::ints(1, 0, 1, 1) };
        for k in 1..33u64 {
            assert!(jump.nth_exact(k).projectively_eq(&gauss().nth_exact(k)));
        }
        assert_eq!(jump.limit_point(), Some(int(0)));
    }

    #[test]
    fn gauss_tail_bound_is_reciprocal_truncation() {
        let unit = Interval::unit();
        assert_eq!(gauss().tail_derivative_bound(&unit, 100), Some(rat(1, 100)));
        let jump = BranchRule::Jump { first: Moebius::ints(0, 1, 1, 1), second: Moebius::ints(1, 0, 1, 1) };
        assert_eq!(jump.tail_derivative_bound(&unit, 100), Some(rat(1, 100)));
    }

    #[test]
    fn geometric_tail_bound() {
        // tent jump family g_n = (2 - x)/2^n: sum_{n>K} 2^-n = 2^-K
        let rule = BranchRule::Geometric { base: Moebius::new(rat(-1, 2), int(1), int(0), int(1)).unwrap(), ratio: rat(1, 2) };
        assert_eq!(rule.tail_derivative_bound(&Interval::unit(), 10), Some(rat(1, 1024)));
    }

    #[test]
    fn locate_picks_lowest_index_at_shared_endpoint() {
        let unit = Interval::unit();
        assert_eq!(locate_in_family(&gauss(), &unit, &rat(1, 3), 1000), Some(2));
        assert_eq!(locate_in_family(&gauss(), &unit, &rat(2, 5), 1000), Some(2));
        assert_eq!(locate_in_family(&gauss(), &unit, &rat(1, 1000), 10), Some(999));
        assert_eq!(locate_in_family(&gauss(), &unit, &int(0), 1000), None);
        assert_eq!(locate_in_family(&gauss(), &unit, &0.0011f64, 1000), Some(909));
    }
}
