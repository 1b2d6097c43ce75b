use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_dynamics::family::locate_in_family;
use crate::interval_dynamics::moebius::{derivative_coeffs, eval_coeffs, inverse_coeffs, Coeffs};
use crate::interval_dynamics::{BranchRule, Interval, Moebius, MoebiusBranch};
use crate::scalar::{format_rational, Rational, Scalar};

/// Countably many pieces: piece `k` has domain `g_k(ambient)` and map `g_k^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceFamily {
    pub rule: BranchRule,
    /// Number of family pieces used when the family has to be enumerated.
    pub truncation: u64,
}

/// Which piece of a [`PiecewiseMap`] is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PieceId {
    /// Zero-based index into the finite pieces.
    Finite(usize),
    /// One-based family index.
    Family(u64),
}

impl fmt::Display for PieceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceId::Finite(i) => write!(f, "piece {}", i + 1),
            PieceId::Family(k) => write!(f, "family piece {k}"),
        }
    }
}

/// A map of an interval made of Moebius pieces over closed subintervals.
///
/// Finite pieces are tried in order before the family; at a shared endpoint the
/// lower-indexed piece wins. Exceptional points override every piece.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseMap {
    ambient: Interval,
    pieces: Vec<MoebiusBranch>,
    family: Option<PieceFamily>,
    exceptional: Vec<(Rational, Rational)>,
}

impl PiecewiseMap {
    pub fn new(
        ambient: Interval,
        pieces: Vec<MoebiusBranch>,
        family: Option<PieceFamily>,
        exceptional: Vec<(Rational, Rational)>,
    ) -> Result<Self> {
        if pieces.is_empty() && family.is_none() {
            return Err(Error::InvalidSystem("a map needs at least one piece".into()));
        }
        if let Some(fam) = &family {
            if fam.truncation == 0 {
                return Err(Error::InvalidConfig("family truncation must be at least 1".into()));
            }
            fam.rule
                .nth_exact(1)
                .image(&ambient)
                .map_err(|e| Error::InvalidSystem(format!("family branch 1: {e}")))?;
        }
        for (x, _) in &exceptional {
            if !ambient.contains(x) {
                return Err(Error::OutOfDomain(format_rational(x)));
            }
        }
        Ok(PiecewiseMap { ambient, pieces, family, exceptional })
    }

    /// Finitely many pieces, no exceptional points.
    pub fn finite(ambient: Interval, pieces: Vec<MoebiusBranch>) -> Result<Self> {
        Self::new(ambient, pieces, None, Vec::new())
    }

    pub fn ambient(&self) -> &Interval {
        &self.ambient
    }

    pub fn pieces(&self) -> &[MoebiusBranch] {
        &self.pieces
    }

    pub fn family(&self) -> Option<&PieceFamily> {
        self.family.as_ref()
    }

    pub fn exceptional(&self) -> &[(Rational, Rational)] {
        &self.exceptional
    }

    /// Finite pieces plus the family truncation.
    pub fn piece_count(&self) -> u64 {
        self.pieces.len() as u64 + self.family.as_ref().map_or(0, |f| f.truncation)
    }

    /// All pieces are affine.
    pub fn is_affine(&self) -> bool {
        self.pieces.iter().all(|p| p.map().is_affine()) && self.family.as_ref().is_none_or(|f| f.rule.is_affine())
    }

    /// The piece as a branch with exact domain.
    pub fn piece(&self, id: PieceId) -> MoebiusBranch {
        match id {
            PieceId::Finite(i) => self.pieces[i].clone(),
            PieceId::Family(k) => {
                let g = self.family.as_ref().expect("family piece of a finite map").rule.nth_exact(k);
                let domain = g.image(&self.ambient).expect("family branches are pole-free");
                MoebiusBranch::new(g.inverse(), domain).expect("inverse branch is pole-free on the range")
            }
        }
    }

    /// Pieces in order: finite ones, then family pieces up to the truncation.
    pub fn enumerate_pieces(&self) -> impl Iterator<Item = (PieceId, MoebiusBranch)> + '_ {
        let finite = (0..self.pieces.len()).map(PieceId::Finite);
        let family = (1..=self.family.as_ref().map_or(0, |f| f.truncation)).map(PieceId::Family);
        finite.chain(family).map(move |id| (id, self.piece(id)))
    }

    /// The piece responsible for `x`, ignoring exceptional points.
    pub fn locate<S: Scalar>(&self, x: &S) -> Result<Option<PieceId>> {
        if !self.ambient.contains(x) {
            return Err(Error::OutOfDomain(x.describe()));
        }
        if let Some(i) = self.pieces.iter().position(|p| p.domain().contains(x)) {
            return Ok(Some(PieceId::Finite(i)));
        }
        Ok(self
            .family
            .as_ref()
            .and_then(|f| locate_in_family(&f.rule, &self.ambient, x, f.truncation))
            .map(PieceId::Family))
    }

    /// Coefficients of the active map on the given piece.
    pub fn piece_coeffs<S: Scalar>(&self, id: PieceId) -> Coeffs<S> {
        match id {
            PieceId::Finite(i) => S::coeffs(self.pieces[i].map()),
            PieceId::Family(k) => {
                inverse_coeffs(&self.family.as_ref().expect("family piece of a finite map").rule.nth::<S>(k))
            }
        }
    }

    fn exceptional_value<S: Scalar>(&self, x: &S) -> Option<S> {
        self.exceptional
            .iter()
            .find(|(p, _)| S::from_rational(p) == *x)
            .map(|(_, v)| S::from_rational(v))
    }

    pub fn eval_map<S: Scalar>(&self, x: &S) -> Result<S> {
        if !self.ambient.contains(x) {
            return Err(Error::OutOfDomain(x.describe()));
        }
        if let Some(v) = self.exceptional_value(x) {
            return Ok(v);
        }
        let id = self.locate(x)?.ok_or_else(|| Error::NoPiece(x.describe()))?;
        eval_coeffs(&self.piece_coeffs::<S>(id), x)
    }

    /// Value and one-sided derivative of the piece selected by the boundary rule.
    /// Unlike [`Self::eval_derivative`] this accepts piece endpoints.
    pub fn eval_with_slope<S: Scalar>(&self, x: &S) -> Result<(S, S)> {
        if !self.ambient.contains(x) {
            return Err(Error::OutOfDomain(x.describe()));
        }
        if self.exceptional_value(x).is_some() {
            return Err(Error::NonDifferentiable(x.describe()));
        }
        let id = self.locate(x)?.ok_or_else(|| Error::NoPiece(x.describe()))?;
        let m = self.piece_coeffs::<S>(id);
        Ok((eval_coeffs(&m, x)?, derivative_coeffs(&m, x)?))
    }

    /// `T'(x)` at a point interior to a piece.
    pub fn eval_derivative<S: Scalar>(&self, x: &S) -> Result<S> {
        if !self.ambient.contains(x) {
            return Err(Error::OutOfDomain(x.describe()));
        }
        if self.exceptional_value(x).is_some() {
            return Err(Error::NonDifferentiable(x.describe()));
        }
        let id = self.locate(x)?.ok_or_else(|| Error::NoPiece(x.describe()))?;
        let (lo, hi) = match id {
            PieceId::Finite(i) => {
                let d = self.pieces[i].domain();
                (S::from_rational(d.lo()), S::from_rational(d.hi()))
            }
            PieceId::Family(k) => {
                let rule = &self.family.as_ref().expect("family piece").rule;
                let a = &self.ambient;
                rule.range_of::<S>(k, &S::from_rational(a.lo()), &S::from_rational(a.hi()))
            }
        };
        if *x == lo || *x == hi {
            return Err(Error::NonDifferentiable(x.describe()));
        }
        derivative_coeffs(&self.piece_coeffs::<S>(id), x)
    }

    pub fn validate(&self) -> PiecewiseReport {
        validate_piecewise(self)
    }
}

/// One overlap of positive length between two piece domains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub first: String,
    pub second: String,
    pub lo: String,
    pub hi: String,
}

/// An uncovered stretch of the ambient interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub lo: String,
    pub hi: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PoleViolation {
    pub piece: String,
    pub pole: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PiecewiseReport {
    pub valid: bool,
    pub pieces_checked: u64,
    pub overlaps: Vec<Overlap>,
    pub gaps: Vec<Gap>,
    pub poles: Vec<PoleViolation>,
    pub range_violations: Vec<String>,
    /// Length left uncovered beyond the last enumerated family piece.
    pub truncation_residual: Option<String>,
}

/// Checks overlaps, coverage, poles and ranges of every enumerated piece.
pub fn validate_piecewise(map: &PiecewiseMap) -> PiecewiseReport {
    let ambient = map.ambient();
    let mut poles = Vec::new();
    let mut range_violations = Vec::new();
    let mut domains: Vec<(PieceId, Interval)> = Vec::new();
    let mut checked = 0u64;

    let finite = map.pieces().iter().enumerate().map(|(i, p)| (PieceId::Finite(i), p.map().clone(), p.domain().clone()));
    let family = map.family().into_iter().flat_map(|f| {
        (1..=f.truncation).map(move |k| {
            let g = f.rule.nth_exact(k);
            let dom = g.image(ambient).expect("family branches are pole-free");
            (PieceId::Family(k), g.inverse(), dom)
        })
    });
    for (id, m, dom) in finite.chain(family) {
        checked += 1;
        if !ambient.contains_interval(&dom) {
            range_violations.push(format!("{id}: domain {dom} leaves the ambient interval"));
        }
        if let Some(p) = m.pole().filter(|p| dom.contains(p)) {
            poles.push(PoleViolation { piece: id.to_string(), pole: format_rational(&p) });
            continue;
        }
        match m.image(&dom) {
            Ok(img) if !ambient.contains_interval(&img) => {
                range_violations.push(format!("{id}: image {img} leaves the ambient interval"))
            }
            Ok(_) => {}
            Err(e) => range_violations.push(format!("{id}: {e}")),
        }
        domains.push((id, dom));
    }

    domains.sort_by(|a, b| a.1.lo().cmp(b.1.lo()).then(a.0.cmp(&b.0)));
    let mut overlaps = Vec::new();
    let mut gaps = Vec::new();
    let mut covered = ambient.lo().clone();
    let mut reach: Option<(PieceId, Rational)> = None;
    for (id, dom) in &domains {
        if let Some((rid, rhi)) = &reach {
            if dom.lo() < rhi {
                let hi = if dom.hi() < rhi { dom.hi() } else { rhi };
                overlaps.push(Overlap {
                    first: rid.to_string(),
                    second: id.to_string(),
                    lo: format_rational(dom.lo()),
                    hi: format_rational(hi),
                });
            }
        }
        if dom.lo() > &covered {
            gaps.push((covered.clone(), dom.lo().clone()));
        }
        if dom.hi() > &covered {
            covered = dom.hi().clone();
        }
        if reach.as_ref().is_none_or(|(_, h)| dom.hi() > h) {
            reach = Some((*id, dom.hi().clone()));
        }
    }
    if &covered < ambient.hi() {
        gaps.push((covered, ambient.hi().clone()));
    }

    // the gap beyond the last family piece is the truncation residual, not a defect
    let mut truncation_residual = None;
    if let Some(f) = map.family() {
        let last = f.rule.nth_exact(f.truncation).image(ambient).expect("pole-free");
        let limit = f.rule.limit_point();
        if let Some(pos) = gaps.iter().position(|(lo, hi)| {
            let adjacent = hi == last.lo() || lo == last.hi();
            let toward_limit = limit.as_ref().is_none_or(|l| lo <= l && l <= hi);
            adjacent && toward_limit
        }) {
            let (lo, hi) = gaps.remove(pos);
            truncation_residual = Some(format_rational(&(hi - lo)));
        } else {
            truncation_residual = Some("0".into());
        }
    }

    let gaps: Vec<Gap> = gaps.into_iter().map(|(lo, hi)| Gap { lo: format_rational(&lo), hi: format_rational(&hi) }).collect();
    PiecewiseReport {
        valid: overlaps.is_empty() && gaps.is_empty() && poles.is_empty() && range_violations.is_empty(),
        pieces_checked: checked,
        overlaps,
        gaps,
        poles,
        range_violations,
        truncation_residual,
    }
}

/// A map with the first family pieces precomputed in one backend, for orbits.
pub struct CompiledMap<'a, S: Scalar> {
    map: &'a PiecewiseMap,
    lo: S,
    hi: S,
    exceptional: Vec<(S, S)>,
    finite: Vec<(S, S, Coeffs<S>)>,
    /// `(range lo, range hi, inverse coefficients)` of family pieces `1..=n`.
    family: Vec<(S, S, Coeffs<S>)>,
    descending: bool,
}

impl<'a, S: Scalar> CompiledMap<'a, S> {
    pub fn new(map: &'a PiecewiseMap, cached_family: u64) -> Self {
        let lo = S::from_rational(map.ambient().lo());
        let hi = S::from_rational(map.ambient().hi());
        let exceptional = map.exceptional().iter().map(|(x, y)| (S::from_rational(x), S::from_rational(y))).collect();
        let finite = map
            .pieces()
            .iter()
            .map(|p| (S::from_rational(p.domain().lo()), S::from_rational(p.domain().hi()), S::coeffs(p.map())))
            .collect();
        let mut family = Vec::new();
        let mut descending = true;
        if let Some(f) = map.family() {
            let n = cached_family.max(2);
            for k in 1..=n {
                let (a, b) = f.rule.range_of::<S>(k, &lo, &hi);
                family.push((a, b, inverse_coeffs(&f.rule.nth::<S>(k))));
            }
            descending = family[1].1 <= family[0].0;
        }
        CompiledMap { map, lo, hi, exceptional, finite, family, descending }
    }

    pub fn eval(&self, x: &S) -> Result<S> {
        if *x < self.lo || *x > self.hi {
            return Err(Error::OutOfDomain(x.describe()));
        }
        if let Some((_, y)) = self.exceptional.iter().find(|(p, _)| p == x) {
            return Ok(y.clone());
        }
        if let Some((_, _, m)) = self.finite.iter().find(|(a, b, _)| a <= x && x <= b) {
            return eval_coeffs(m, x);
        }
        if self.family.is_empty() {
            return Err(Error::NoPiece(x.describe()));
        }
        let reached = |e: &(S, S, Coeffs<S>)| if self.descending { e.0 <= *x } else { e.1 >= *x };
        let first = &self.family[0];
        let idx = self.family.partition_point(|e| !reached(e));
        if idx == self.family.len() || (idx == 0 && !(first.0 <= *x && *x <= first.1)) {
            return self.map.eval_map(x);
        }
        let (a, b, m) = &self.family[idx];
        if S::EXACT && !(a <= x && x <= b) {
            return self.map.eval_map(x);
        }
        eval_coeffs(m, x)
    }
}

impl PieceFamily {
    pub fn new(rule: BranchRule, truncation: u64) -> Self {
        PieceFamily { rule, truncation }
    }
}

/// Convenience: a piece `(domain, map)` with the pole check applied.
pub fn piece(domain: Interval, map: Moebius) -> Result<MoebiusBranch> {
    MoebiusBranch::new(map, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn half() -> Rational {
        rat(1, 2)
    }

    fn farey() -> PiecewiseMap {
        let right = piece(Interval::new(half(), int(1)).unwrap(), Moebius::ints(-1, 1, 1, 0)).unwrap();
        let left = piece(Interval::new(int(0), half()).unwrap(), Moebius::ints(1, 0, -1, 1)).unwrap();
        PiecewiseMap::finite(Interval::unit(), vec![right, left]).unwrap()
    }

    fn gauss() -> PiecewiseMap {
        let rule = BranchRule::Harmonic { base: Moebius::ints(0, 1, 1, 1), shift: int(1) };
        PiecewiseMap::new(Interval::unit(), vec![], Some(PieceFamily::new(rule, 64)), vec![(int(0), int(0))]).unwrap()
    }

    fn tent() -> PiecewiseMap {
        let right = piece(Interval::new(half(), int(1)).unwrap(), Moebius::ints(-2, 2, 0, 1)).unwrap();
        let left = piece(Interval::new(int(0), half()).unwrap(), Moebius::ints(2, 0, 0, 1)).unwrap();
        PiecewiseMap::finite(Interval::unit(), vec![right, left]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(gauss().eval_map(&int(0)).unwrap(), int(0));
        assert_eq!(gauss().eval_map(&rat(2, 5)).unwrap(), half());
        assert_eq!(tent().eval_map(&half()).unwrap(), int(1));
        assert_eq!(farey().eval_map(&rat(3, 8)).unwrap(), rat(3, 5));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(tent().eval_derivative(&rat(1, 4)).unwrap(), int(2));
        assert_eq!(gauss().eval_derivative(&rat(2, 5)).unwrap(), rat(-25, 4));
        let id = PiecewiseMap::finite(Interval::unit(), vec![piece(Interval::unit(), Moebius::identity()).unwrap()]).unwrap();
        assert_eq!(id.eval_derivative(&rat(1, 3)).unwrap(), int(1));
        assert!(matches!(tent().eval_derivative(&half()), Err(Error::NonDifferentiable(_))));
        assert!(matches!(gauss().eval_derivative(&rat(1, 3)), Err(Error::NonDifferentiable(_))));
    }

    #[test]
    fn errors() {
        assert!(matches!(tent().eval_map(&int(2)), Err(Error::OutOfDomain(_))));
        let gap = PiecewiseMap::finite(
            Interval::unit(),
            vec![piece(Interval::new(int(0), half()).unwrap(), Moebius::identity()).unwrap()],
        )
        .unwrap();
        assert!(matches!(gap.eval_map(&rat(3, 4)), Err(Error::NoPiece(_))));
    }

    #[test]
    fn gauss_boundary_goes_to_lower_index() {
        // 1/3 is the shared endpoint of family pieces 2 and 3; piece 2 maps it to 1
        assert_eq!(gauss().eval_map(&rat(1, 3)).unwrap(), int(1));
        let y: f64 = gauss().eval_map(&0.3f64).unwrap();
        assert!((y - (1.0 / 0.3 - 3.0)).abs() < 1e-15);
    }

    #[test]
    fn validation_examples() {
        assert!(farey().validate().valid);
        let overlapping = PiecewiseMap::finite(
            Interval::unit(),
            vec![
                piece(Interval::new(int(0), half()).unwrap(), Moebius::identity()).unwrap(),
                piece(Interval::new(rat(1, 4), int(1)).unwrap(), Moebius::identity()).unwrap(),
            ],
        )
        .unwrap();
        let report = overlapping.validate();
        assert!(!report.valid);
        assert_eq!((report.overlaps[0].lo.as_str(), report.overlaps[0].hi.as_str()), ("1/4", "1/2"));

        // a pole cannot be built into a branch, so wrap it by hand
        let bad = PiecewiseMap {
            ambient: Interval::unit(),
            pieces: vec![MoebiusBranch::unchecked(Moebius::ints(0, 1, 1, 0), Interval::unit())],
            family: None,
            exceptional: vec![],
        };
        let report = bad.validate();
        assert_eq!(report.poles[0].pole, "0");
    }

    #[test]
    fn gauss_validation_reports_residual() {
        let report = gauss().validate();
        assert!(report.valid, "{report:?}");
        assert_eq!(report.truncation_residual.as_deref(), Some("1/65"));
    }

    #[test]
    fn compiled_agrees_with_direct() {
        let g = gauss();
        let c = CompiledMap::<f64>::new(&g, 256);
        for i in 1..2000 {
            let x = i as f64 / 2000.0 + 1e-9;
            assert_eq!(c.eval(&x).unwrap(), g.eval_map(&x).unwrap());
        }
        let c = CompiledMap::<Rational>::new(&g, 64);
        for q in 2..200 {
            let x = rat(1, q);
            assert_eq!(c.eval(&x).unwrap(), g.eval_map(&x).unwrap());
        }
    }
}
