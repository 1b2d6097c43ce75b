use rayon::prelude::*;
use serde::Serialize;

use crate::branching::{Arity, BranchSystem, Branches};
use crate::error::{Error, Result};
use crate::interval_dynamics::{derivative_coeffs, eval_coeffs, Interval, PiecewiseMap};
use crate::measure::Density;
use crate::scalar::{format_rational, rational_to_f64, Rational, Scalar};

/// A truncated transfer-operator value and a bound on the omitted terms.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferValue<S> {
    pub value: S,
    pub terms: u64,
    /// Bound on the omitted terms of the unnormalized density; zero for finite systems.
    pub tail_bound: Rational,
}

fn tail_bound(f: &BranchSystem, phi: &Density, terms: u64) -> Result<Rational> {
    match f.branches() {
        Branches::Finite(_) => Ok(Rational::from_integer(0.into())),
        Branches::Countable { rule, .. } => {
            let sup = phi
                .sup_on(f.ambient())
                .ok_or_else(|| Error::TailUnbounded(format!("{phi} is unbounded on {}", f.ambient())))?;
            let decay = rule
                .tail_derivative_bound(f.ambient(), terms)
                .ok_or_else(|| Error::TailUnbounded(format!("no derivative decay bound for the {} rule", rule.kind())))?;
            Ok(sup * decay)
        }
    }
}

/// `sum_{i <= K} |f_i'(x)| φ(f_i(x))` for the unnormalized density; `K` defaults to
/// every branch of a finite system or the system truncation.
pub fn transfer_apply<S: Scalar>(f: &BranchSystem, phi: &Density, x: &S, truncation: Option<u64>) -> Result<TransferValue<S>> {
    if !f.ambient().contains(x) {
        return Err(Error::OutOfDomain(x.describe()));
    }
    let terms = match f.arity() {
        Arity::Finite(n) => n as u64,
        Arity::Infinite => truncation.unwrap_or_else(|| f.enumerated()),
    };
    let tail = tail_bound(f, phi, terms)?;
    let lifted_phi = phi.lift::<S>();
    let term = |m: &[S; 4]| -> Result<S> { Ok(derivative_coeffs(m, x)?.magnitude() * lifted_phi.eval(&eval_coeffs(m, x)?)?) };
    let value = match f.branches() {
        Branches::Finite(v) => S::total(v.iter().map(|m| term(&S::coeffs(m))).collect::<Result<Vec<_>>>()?),
        Branches::Countable { rule, .. } => {
            let lifted = rule.lift::<S>();
            let mut parts = Vec::with_capacity(terms.min(1 << 22) as usize);
            for k in 1..=terms {
                parts.push(term(&lifted.nth(k))?);
            }
            S::total(parts)
        }
    };
    Ok(TransferValue { value, terms, tail_bound: tail })
}

/// Smallest truncation whose normalized tail bound is at most `eps`.
pub fn truncation_for_bound(f: &BranchSystem, phi: &Density, eps: f64) -> Result<u64> {
    if let Arity::Finite(n) = f.arity() {
        return Ok(n as u64);
    }
    let norm = phi.normalization().map_or(1.0, |n| n.value);
    let ok = |k: u64| -> Result<bool> { Ok(rational_to_f64(&tail_bound(f, phi, k)?) * norm <= eps) };
    let mut hi = 1u64;
    while tail_bound(f, phi, hi).is_err() || !ok(hi)? {
        if hi > 1 << 40 {
            return Err(Error::TailUnbounded(format!("no truncation reaches {eps:e}")));
        }
        hi *= 2;
    }
    // the doubling stopped at the first passing power of two, so `lo` fails
    let mut lo = hi / 2;
    if lo == 0 {
        return Ok(hi);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail_bound(f, phi, mid).is_ok() && ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub terms: u64,
    /// Exact tail bound of the unnormalized sum.
    pub tail_bound: String,
    /// Largest `|L φ - φ|`, normalized.
    pub max_raw: f64,
    /// Largest `max(0, |L φ - φ| - tail)`, normalized.
    pub max_excess: f64,
    /// No sample exceeds the tail bound, decided in the backend's own arithmetic.
    pub exact_zero: bool,
    pub worst_sample: Option<String>,
}

/// Fixed-point residual of the transfer operator over `samples`.
pub fn invariance_residual<S: Scalar>(
    f: &BranchSystem,
    phi: &Density,
    samples: &[S],
    truncation: Option<u64>,
) -> Result<InvarianceReport> {
    let norm = phi.normalization().map_or(1.0, |n| n.value);
    let rows: Vec<(S, S, u64, Rational)> = samples
        .par_iter()
        .map(|x| {
            let t = transfer_apply(f, phi, x, truncation)?;
            let raw = (t.value - phi.eval(x)?).magnitude();
            let tail = S::from_rational(&t.tail_bound);
            let excess = if raw > tail { raw.clone() - tail } else { S::nil() };
            Ok((raw, excess, t.terms, t.tail_bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = InvarianceReport {
        samples: samples.len(),
        terms: 0,
        tail_bound: "0".into(),
        max_raw: 0.0,
        max_excess: 0.0,
        exact_zero: true,
        worst_sample: None,
    };
    for (x, (raw, excess, terms, tail)) in samples.iter().zip(rows) {
        report.terms = terms;
        report.tail_bound = format_rational(&tail);
        if !excess.is_nil() {
            report.exact_zero = false;
        }
        let r = raw.as_f64() * norm;
        if r > report.max_raw {
            report.max_raw = r;
            report.worst_sample = Some(x.describe());
        }
        report.max_excess = report.max_excess.max(excess.as_f64() * norm);
    }
    Ok(report)
}

/// `ψ = |f_1'| · φ ∘ f_1`, defined only up to a constant; left unnormalized.
pub fn transport_density(f: &BranchSystem, phi: &Density) -> Result<Density> {
    match f.arity() {
        Arity::Finite(2) => Ok(phi.pullback(&f.branch(1)?).checked_against(f.ambient())),
        other => Err(Error::ArityMismatch { expected: "2".into(), found: other.to_string() }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullbackReport {
    pub compared: usize,
    pub excluded: usize,
    pub max_residual: f64,
    pub exact_zero: bool,
}

/// `max |ψ_1(x) - |T'(x)| ψ_2(T(x))|` over samples; non-differentiable points are skipped.
pub fn pullback_check<S: Scalar>(t: &PiecewiseMap, psi1: &Density, psi2: &Density, samples: &[S]) -> Result<PullbackReport> {
    let mut report = PullbackReport { compared: 0, excluded: 0, max_residual: 0.0, exact_zero: true };
    for x in samples {
        let slope = match t.eval_derivative(x) {
            Ok(s) => s,
            Err(Error::NonDifferentiable(_)) => {
                report.excluded += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let rhs = slope.magnitude() * psi2.eval(&t.eval_map(x)?)?;
        let diff = (psi1.eval(x)? - rhs).magnitude();
        report.compared += 1;
        if !diff.is_nil() {
            report.exact_zero = false;
        }
        report.max_residual = report.max_residual.max(diff.as_f64());
    }
    Ok(report)
}

/// `ν(E) = ∫_{T^{-1}(E) ∩ A} φ dx` for the unnormalized density, summed over the
/// enumerated pieces of `T`.
pub fn induced_measure(t: &PiecewiseMap, a: &Interval, phi: &Density, e: &Interval) -> Result<f64> {
    if !t.ambient().contains_interval(e) {
        return Err(Error::OutOfDomain(e.to_string()));
    }
    let mut parts = Vec::new();
    for (_, piece) in t.enumerate_pieces() {
        let Some(hit) = piece.range().overlap(e) else { continue };
        let inv = piece.map().inverse();
        let Some(pre) = Interval::spanning(inv.eval(hit.lo())?, inv.eval(hit.hi())?) else { continue };
        if let Some(part) = pre.overlap(piece.domain()).and_then(|p| p.overlap(a)) {
            parts.push(phi.integral(part.lo(), part.hi())?);
        }
    }
    Ok(f64::total(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::jump_family;
    use crate::interval_dynamics::{piece, BranchRule, Moebius};
    use crate::scalar::{int, rat};

    fn system(f1: Moebius, f2: Moebius) -> BranchSystem {
        BranchSystem::finite(Interval::unit(), vec![f1, f2]).unwrap()
    }

    fn farey() -> BranchSystem {
        system(Moebius::ints(0, 1, 1, 1), Moebius::ints(1, 0, 1, 1))
    }

    fn tent() -> BranchSystem {
        system(
            Moebius::new(rat(-1, 2), int(1), int(0), int(1)).unwrap(),
            Moebius::new(rat(1, 2), int(0), int(0), int(1)).unwrap(),
        )
    }

    fn chan() -> BranchSystem {
        system(Moebius::ints(0, 1, 1, 1), Moebius::new(rat(1, 2), int(0), int(0), int(1)).unwrap())
    }

    fn gauss(k: u64) -> BranchSystem {
        BranchSystem::countable(Interval::unit(), BranchRule::Harmonic { base: Moebius::ints(0, 1, 1, 1), shift: int(1) }, k).unwrap()
    }

    #[test]
    fn farey_fixes_theta_exactly() {
        for x in [rat(1, 3), rat(5, 7), rat(1, 2)] {
            let t = transfer_apply(&farey(), &Density::theta(), &x, None).unwrap();
            assert_eq!(t.value, Density::theta().eval(&x).unwrap());
        }
    }

    #[test]
    fn chan_fixes_gauss_density() {
        let g = Density::gauss();
        for x in [rat(1, 3), rat(2, 9)] {
            assert_eq!(transfer_apply(&chan(), &g, &x, None).unwrap().value, g.eval(&x).unwrap());
        }
    }

    #[test]
    fn gauss_family_within_tail() {
        let g = Density::gauss();
        let t = transfer_apply(&gauss(1000), &g, &0.3f64, Some(100_000)).unwrap();
        let gap = (t.value - g.eval(&0.3).unwrap()).abs();
        assert!(gap <= rational_to_f64(&t.tail_bound));
        assert_eq!(t.tail_bound, rat(1, 100_000));
    }

    #[test]
    fn invariance_examples() {
        let xs: Vec<Rational> = (1..25).map(|j| rat(j, 25)).collect();
        let r = invariance_residual(&tent(), &Density::lebesgue(), &xs, None).unwrap();
        assert!(r.exact_zero && r.max_raw == 0.0);
        let jumps = jump_family(&tent(), 30).unwrap();
        let r = invariance_residual(&jumps, &Density::lebesgue(), &xs, None).unwrap();
        assert!(r.exact_zero);
        assert_eq!(r.tail_bound, "1/1073741824");
        let r = invariance_residual(&farey(), &Density::gauss(), &[rat(1, 2)], None).unwrap();
        assert!(!r.exact_zero && r.max_raw > 0.01);
    }

    #[test]
    fn unbounded_tail() {
        assert!(matches!(transfer_apply(&gauss(10), &Density::theta(), &rat(1, 2), None), Err(Error::TailUnbounded(_))));
    }

    #[test]
    fn truncation_search() {
        let k = truncation_for_bound(&gauss(10), &Density::new(int(1), [(int(1), -1)]).unwrap(), 1e-3).unwrap();
        assert_eq!(k, 1000);
        let k = truncation_for_bound(&jump_family(&tent(), 4).unwrap(), &Density::lebesgue(), 1e-6).unwrap();
        assert_eq!(k, 20);
    }

    #[test]
    fn transports() {
        assert_eq!(transport_density(&farey(), &Density::theta()).unwrap().formula(), "1/(x+1)");
        let chan_psi = transport_density(&chan(), &Density::gauss()).unwrap();
        assert!(chan_psi.projectively_eq(&Density::mu2()));
        assert_eq!(transport_density(&tent(), &Density::lebesgue()).unwrap().formula(), "1/2");
        assert!(transport_density(&gauss(4), &Density::gauss()).is_err());
    }

    #[test]
    fn pullbacks() {
        let unit = Interval::unit();
        let xs: Vec<Rational> = (1..50).map(|j| rat(j, 50)).collect();
        let f1 = PiecewiseMap::finite(unit.clone(), vec![piece(unit.clone(), Moebius::ints(0, 1, 1, 1)).unwrap()]).unwrap();
        let psi = transport_density(&farey(), &Density::theta()).unwrap();
        assert!(pullback_check(&f1, &psi, &Density::theta(), &xs).unwrap().exact_zero);
        let id = PiecewiseMap::finite(unit.clone(), vec![piece(unit.clone(), Moebius::identity()).unwrap()]).unwrap();
        assert!(pullback_check(&id, &Density::gauss(), &Density::gauss(), &xs).unwrap().exact_zero);
        let half = PiecewiseMap::finite(unit.clone(), vec![piece(unit.clone(), Moebius::new(rat(1, 2), int(0), int(0), int(1)).unwrap()).unwrap()]).unwrap();
        let r = pullback_check(&half, &Density::constant(rat(1, 2)).unwrap(), &Density::lebesgue(), &xs).unwrap();
        assert!(r.exact_zero && r.compared == 49);
    }

    #[test]
    fn induced_examples() {
        let half = Interval::new(rat(1, 2), int(1)).unwrap();
        let sigma = PiecewiseMap::finite(
            Interval::unit(),
            vec![
                piece(half.clone(), Moebius::ints(-1, 1, 1, 0)).unwrap(),
                piece(Interval::new(int(0), rat(1, 2)).unwrap(), Moebius::ints(1, 0, -1, 1)).unwrap(),
            ],
        )
        .unwrap();
        let e = Interval::new(rat(1, 3), rat(1, 2)).unwrap();
        let v = induced_measure(&sigma, &half, &Density::theta(), &e).unwrap();
        assert!((v - (9.0f64 / 8.0).ln()).abs() < 1e-15);
        let all = induced_measure(&sigma, &half, &Density::theta(), &Interval::unit()).unwrap();
        assert!((all - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
