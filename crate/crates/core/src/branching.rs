//! Branching function systems `{f_i}`: injective Moebius branches of an interval
//! whose ranges `R_i = f_i(X)` tile `X` up to a null set.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_dynamics::{
    validate_piecewise, BranchRule, Coeffs, Gap, Interval, Moebius, MoebiusBranch, Overlap, PieceFamily, PiecewiseMap,
    PoleViolation,
};
use crate::scalar::{format_rational, Rational, Scalar};

/// Default number of branches enumerated for countable systems.
pub const DEFAULT_TRUNCATION: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Finite(n) => write!(f, "{n}"),
            Arity::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Branches {
    Finite(Vec<Moebius>),
    /// Branch `k` is `rule.nth(k)`; `truncation` branches are used by finite checks.
    Countable { rule: BranchRule, truncation: u64 },
}

/// Branches are indexed from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchSystem {
    ambient: Interval,
    branches: Branches,
}

impl BranchSystem {
    pub fn finite(ambient: Interval, branches: Vec<Moebius>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidSystem("no branches".into()));
        }
        for (i, f) in branches.iter().enumerate() {
            if let Some(p) = f.pole().filter(|p| ambient.contains(p)) {
                return Err(Error::InvalidSystem(format!("branch {} has a pole at {}", i + 1, format_rational(&p))));
            }
        }
        Ok(BranchSystem { ambient, branches: Branches::Finite(branches) })
    }

    pub fn countable(ambient: Interval, rule: BranchRule, truncation: u64) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::InvalidConfig("truncation must be at least 1".into()));
        }
        for k in 1..=2 {
            rule.nth_exact(k)
                .image(&ambient)
                .map_err(|e| Error::InvalidSystem(format!("branch {k}: {e}")))?;
        }
        Ok(BranchSystem { ambient, branches: Branches::Countable { rule, truncation } })
    }

    pub fn ambient(&self) -> &Interval {
        &self.ambient
    }

    pub fn branches(&self) -> &Branches {
        &self.branches
    }

    pub fn arity(&self) -> Arity {
        match &self.branches {
            Branches::Finite(v) => Arity::Finite(v.len()),
            Branches::Countable { .. } => Arity::Infinite,
        }
    }

    /// Branches used by enumerating checks: all of them, or the truncation.
    pub fn enumerated(&self) -> u64 {
        match &self.branches {
            Branches::Finite(v) => v.len() as u64,
            Branches::Countable { truncation, .. } => *truncation,
        }
    }

    pub fn truncation(&self) -> Option<u64> {
        match &self.branches {
            Branches::Finite(_) => None,
            Branches::Countable { truncation, .. } => Some(*truncation),
        }
    }

    /// Same system with another truncation (no effect on finite systems).
    pub fn with_truncation(&self, k: u64) -> Result<Self> {
        match &self.branches {
            Branches::Finite(_) => Ok(self.clone()),
            Branches::Countable { rule, .. } => Self::countable(self.ambient.clone(), rule.clone(), k),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        let ok = i >= 1
            && match &self.branches {
                Branches::Finite(v) => i <= v.len(),
                Branches::Countable { .. } => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, arity: self.arity().to_string() })
        }
    }

    /// `f_i`, one-based.
    pub fn branch(&self, i: usize) -> Result<Moebius> {
        self.check_index(i)?;
        Ok(match &self.branches {
            Branches::Finite(v) => v[i - 1].clone(),
            Branches::Countable { rule, .. } => rule.nth_exact(i as u64),
        })
    }

    /// Coefficients of `f_i` in backend `S`; cheap for countable rules in `f64`.
    pub fn branch_coeffs<S: Scalar>(&self, i: usize) -> Result<Coeffs<S>> {
        self.check_index(i)?;
        Ok(match &self.branches {
            Branches::Finite(v) => S::coeffs(&v[i - 1]),
            Branches::Countable { rule, .. } => rule.nth::<S>(i as u64),
        })
    }

    /// `R_i = f_i(X)`.
    pub fn range(&self, i: usize) -> Result<Interval> {
        self.branch(i)?.image(&self.ambient)
    }

    pub fn branch_on_ambient(&self, i: usize) -> Result<MoebiusBranch> {
        MoebiusBranch::new(self.branch(i)?, self.ambient.clone())
    }

    pub fn validate(&self) -> SystemReport {
        validate_system(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SystemReport {
    pub valid: bool,
    pub arity: String,
    pub branches_checked: u64,
    pub overlaps: Vec<Overlap>,
    pub gaps: Vec<Gap>,
    pub poles: Vec<PoleViolation>,
    pub range_violations: Vec<String>,
    /// `|X| - sum |R_i|` over the checked branches, exact.
    pub coverage_residual: String,
}

fn coding_map_unchecked(f: &BranchSystem) -> Result<PiecewiseMap> {
    match &f.branches {
        Branches::Finite(v) => {
            let pieces = v
                .iter()
                .map(|m| MoebiusBranch::new(m.inverse(), m.image(&f.ambient)?))
                .collect::<Result<Vec<_>>>()?;
            PiecewiseMap::finite(f.ambient.clone(), pieces)
        }
        Branches::Countable { rule, truncation } => PiecewiseMap::new(
            f.ambient.clone(),
            Vec::new(),
            Some(PieceFamily::new(rule.clone(), *truncation)),
            Vec::new(),
        ),
    }
}

/// Disjointness and coverage of the ranges, and ranges inside the ambient interval.
pub fn validate_system(f: &BranchSystem) -> SystemReport {
    let arity = f.arity().to_string();
    let map = match coding_map_unchecked(f) {
        Ok(m) => m,
        Err(e) => {
            return SystemReport {
                valid: false,
                arity,
                branches_checked: 0,
                overlaps: vec![],
                gaps: vec![],
                poles: vec![],
                range_violations: vec![e.to_string()],
                coverage_residual: "undefined".into(),
            }
        }
    };
    let report = validate_piecewise(&map);
    let mut covered = Rational::zero();
    for i in 1..=f.enumerated() {
        covered += f.range(i as usize).map(|r| r.length()).unwrap_or_else(|_| Rational::zero());
    }
    let residual = f.ambient.length() - covered;
    let mut valid = report.valid;
    if matches!(f.arity(), Arity::Finite(n) if n < 2) {
        valid = false;
    }
    SystemReport {
        valid,
        arity,
        branches_checked: report.pieces_checked,
        overlaps: report.overlaps,
        gaps: report.gaps,
        poles: report.poles,
        range_violations: report.range_violations,
        coverage_residual: format_rational(&residual),
    }
}

/// The coding map `F` with pieces `(R_i, f_i^{-1})`, so `F ∘ f_i = id`.
pub fn coding_map_of(f: &BranchSystem) -> Result<PiecewiseMap> {
    let report = validate_system(f);
    if !report.valid {
        return Err(Error::InvalidSystem(summarize(&report)));
    }
    coding_map_unchecked(f)
}

fn summarize(r: &SystemReport) -> String {
    if let Some(o) = r.overlaps.first() {
        return format!("ranges of {} and {} overlap on [{}, {}]", o.first, o.second, o.lo, o.hi);
    }
    if let Some(g) = r.gaps.first() {
        return format!("ranges leave [{}, {}] uncovered", g.lo, g.hi);
    }
    if let Some(v) = r.range_violations.first() {
        return v.clone();
    }
    format!("arity {} is below 2", r.arity)
}

/// `f_{i_1} ∘ f_{i_2} ∘ ... ∘ f_{i_m}` on the ambient interval.
pub fn compose_branches(f: &BranchSystem, word: &[usize]) -> Result<MoebiusBranch> {
    let Some((&last, rest)) = word.split_last() else {
        return Err(Error::InvalidConfig("empty branch word".into()));
    };
    let mut acc = f.branch(last)?;
    for &i in rest.iter().rev() {
        acc = f.branch(i)?.compose(&acc);
    }
    MoebiusBranch::new(acc, f.ambient.clone())
}

/// `g_n = f_2^{n-1} ∘ f_1` for an arity-two system.
pub fn jump_family(f: &BranchSystem, truncation: u64) -> Result<BranchSystem> {
    match &f.branches {
        Branches::Finite(v) if v.len() == 2 => BranchSystem::countable(
            f.ambient.clone(),
            BranchRule::Jump { first: v[0].clone(), second: v[1].clone() },
            truncation,
        ),
        _ => Err(Error::ArityMismatch { expected: "2".into(), found: f.arity().to_string() }),
    }
}

/// Radon-Nikodym derivative of a branch against Lebesgue measure, `|f'(x)|`.
pub fn rn_derivative<S: Scalar>(branch: &MoebiusBranch, x: &S) -> Result<S> {
    Ok(branch.derivative(x)?.magnitude())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn farey() -> BranchSystem {
        BranchSystem::finite(Interval::unit(), vec![Moebius::ints(0, 1, 1, 1), Moebius::ints(1, 0, 1, 1)]).unwrap()
    }

    fn tent() -> BranchSystem {
        let f1 = Moebius::new(rat(-1, 2), int(1), int(0), int(1)).unwrap();
        let f2 = Moebius::new(rat(1, 2), int(0), int(0), int(1)).unwrap();
        BranchSystem::finite(Interval::unit(), vec![f1, f2]).unwrap()
    }

    fn chan() -> BranchSystem {
        let f2 = Moebius::new(rat(1, 2), int(0), int(0), int(1)).unwrap();
        BranchSystem::finite(Interval::unit(), vec![Moebius::ints(0, 1, 1, 1), f2]).unwrap()
    }

    #[test]
    fn farey_pair_is_valid() {
        let f = farey();
        let r = f.validate();
        assert!(r.valid, "{r:?}");
        assert_eq!(r.coverage_residual, "0");
        assert_eq!(f.range(1).unwrap(), Interval::new(rat(1, 2), int(1)).unwrap());
        assert_eq!(f.range(2).unwrap(), Interval::new(int(0), rat(1, 2)).unwrap());
    }

    #[test]
    fn gauss_residual_at_100() {
        let g = BranchSystem::countable(
            Interval::unit(),
            BranchRule::Harmonic { base: Moebius::ints(0, 1, 1, 1), shift: int(1) },
            100,
        )
        .unwrap();
        let r = g.validate();
        assert!(r.valid);
        assert_eq!(r.coverage_residual, "1/101");
    }

    #[test]
    fn duplicate_branch_overlaps() {
        let f = BranchSystem::finite(Interval::unit(), vec![Moebius::ints(0, 1, 1, 1), Moebius::ints(0, 1, 1, 1)]).unwrap();
        let r = f.validate();
        assert!(!r.valid);
        assert!(!r.overlaps.is_empty());
        assert!(matches!(coding_map_of(&f), Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn coding_maps() {
        let lambda = coding_map_of(&tent()).unwrap();
        for (x, y) in [(rat(1, 4), rat(1, 2)), (rat(3, 4), rat(1, 2)), (rat(1, 2), int(1)), (int(1), int(0))] {
            assert_eq!(lambda.eval_map(&x).unwrap(), y);
        }
        let sigma = coding_map_of(&farey()).unwrap();
        assert_eq!(sigma.eval_map(&rat(3, 8)).unwrap(), rat(3, 5));
        let tau = coding_map_of(&jump_family(&farey(), 100).unwrap()).unwrap();
        assert_eq!(tau.eval_map(&rat(2, 5)).unwrap(), rat(1, 2));
    }

    #[test]
    fn compositions() {
        let w = compose_branches(&farey(), &[2, 1]).unwrap();
        assert!(w.map().projectively_eq(&Moebius::ints(0, 1, 1, 2)));
        assert_eq!(compose_branches(&farey(), &[1]).unwrap().map(), &Moebius::ints(0, 1, 1, 1));
        let g3 = compose_branches(&tent(), &[2, 2, 1]).unwrap();
        assert!(g3.map().projectively_eq(&Moebius::new(rat(-1, 8), rat(1, 4), int(0), int(1)).unwrap()));
        assert!(matches!(compose_branches(&farey(), &[3]), Err(Error::IndexOutOfRange { index: 3, .. })));
        assert!(compose_branches(&farey(), &[]).is_err());
    }

    #[test]
    fn jump_families_match_closed_forms() {
        let tent_g = jump_family(&tent(), 64).unwrap();
        let farey_g = jump_family(&farey(), 64).unwrap();
        let chan_g = jump_family(&chan(), 64).unwrap();
        for n in 1..=20usize {
            let p = 1i64 << n;
            let tent_n = Moebius::new(rat(-1, p), rat(2, p), int(0), int(1)).unwrap();
            assert!(tent_g.branch(n).unwrap().projectively_eq(&tent_n));
            assert!(farey_g.branch(n).unwrap().projectively_eq(&Moebius::ints(0, 1, 1, n as i64)));
            let half_pow = 1i64 << (n - 1);
            assert!(chan_g.branch(n).unwrap().projectively_eq(&Moebius::ints(0, 1, half_pow, half_pow)));
        }
        let g = BranchSystem::countable(Interval::unit(), BranchRule::Harmonic { base: Moebius::ints(0, 1, 1, 1), shift: int(1) }, 4).unwrap();
        assert!(matches!(jump_family(&g, 4), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn radon_nikodym_weights() {
        let f1 = farey().branch_on_ambient(1).unwrap();
        assert_eq!(rn_derivative(&f1, &int(0)).unwrap(), int(1));
        let t2 = tent().branch_on_ambient(2).unwrap();
        assert_eq!(rn_derivative(&t2, &rat(3, 7)).unwrap(), rat(1, 2));
        let g = jump_family(&farey(), 64).unwrap();
        for k in 1..10usize {
            let gk = g.branch_on_ambient(k).unwrap();
            let x = rat(2, 7);
            let expected = Rational::from_integer(1.into()) / ((&x + int(k as i64)) * (&x + int(k as i64)));
            assert_eq!(rn_derivative(&gk, &x).unwrap(), expected);
        }
        assert!(matches!(rn_derivative(&f1, &int(2)), Err(Error::NonDifferentiable(_))));
    }

    #[test]
    fn jump_ranges_fill_all_but_the_limit() {
        // sum |g_n(X)| telescopes to |X| - |f_2^K(X)|
        for f in [tent(), farey(), chan()] {
            let g = jump_family(&f, 40).unwrap();
            let total: Rational = (1..=40).map(|n| g.range(n).unwrap().length()).sum();
            let tail = f.branch(2).unwrap().pow(40).image(f.ambient()).unwrap().length();
            assert_eq!(total + tail, int(1));
        }
    }
}
