use rayon::prelude::*;
use serde::Serialize;

use crate::branching::{compose_branches, Arity};
use crate::cuntz::{
    alternative_embedding, embedding_word, Evaluator, Letter, OperatorExpr, OperatorWord, Representation, RootScalar,
    TestFunction,
};
use crate::error::{Error, Result};
use crate::grid::{nodes, nodes_f64, DEFAULT_GRID};
use crate::scalar::{format_rational, Rational, Scalar};

/// Float deviations at or below this count as zero.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CuntzConfig {
    /// Quadrature grid for norms and inner products.
    pub grid: usize,
    /// Pointwise identities are checked at the midpoints of this many cells.
    pub sample_nodes: usize,
    /// Largest index used in pairwise checks of countable systems.
    pub pair_depth: usize,
}

impl Default for CuntzConfig {
    fn default() -> Self {
        CuntzConfig { grid: DEFAULT_GRID, sample_nodes: 64, pair_depth: 16 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Deviation {
    pub max: f64,
    pub exact_zero: bool,
    pub checked: u64,
    pub worst: Option<String>,
}

impl Deviation {
    fn new() -> Self {
        Deviation { max: 0.0, exact_zero: true, checked: 0, worst: None }
    }

    fn track<S: RootScalar>(&mut self, diff: &S::Root, label: impl FnOnce() -> String) {
        self.checked += 1;
        if *diff == S::root_zero() {
            return;
        }
        self.exact_zero = false;
        let size = S::root_to_f64(diff).abs();
        if self.worst.is_none() || size > self.max {
            self.max = size;
            self.worst = Some(label());
        }
    }

    /// Exact backends need exact zero, float ones the float tolerance.
    pub fn ok(&self, exact: bool) -> bool {
        if exact {
            self.exact_zero
        } else {
            self.max <= FLOAT_TOLERANCE
        }
    }
}

fn backend<S: Scalar>() -> &'static str {
    if S::EXACT {
        "exact"
    } else {
        "float"
    }
}

fn sample_points<S: Scalar>(rep: &Representation, m: usize) -> Vec<S> {
    nodes(rep.system().ambient(), m).iter().map(S::from_rational).collect()
}

/// Tracks `(e φ)(x) - target(φ, x)` over all test functions and sample points.
fn compare<S: RootScalar>(
    dev: &mut Deviation,
    ev: &Evaluator<S>,
    e: &OperatorExpr,
    tests: &[TestFunction],
    points: &[S],
    target: impl Fn(&TestFunction, &S) -> Result<S::Root> + Sync,
) -> Result<()> {
    let rows = points
        .par_iter()
        .map(|x| {
            let values = ev.eval_expr_many(e, tests, x)?;
            values.into_iter().zip(tests).map(|(v, phi)| Ok(v - target(phi, x)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    for (x, row) in points.iter().zip(&rows) {
        for (phi, d) in tests.iter().zip(row) {
            dev.track::<S>(d, || format!("{e} on {phi} at x = {}", x.describe()));
        }
    }
    Ok(())
}

fn word(letters: Vec<Letter>) -> Result<OperatorExpr> {
    Ok(OperatorWord::new(letters)?.into())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessEntry {
    pub function: String,
    /// `‖sum_{i<=K} S_i S_i* φ - φ‖²` by midpoint quadrature.
    pub residual_sq: f64,
    /// `‖φ‖∞² (|X \ ∪R_i| + h)` when ranges leave a gap, else round-off.
    pub bound: f64,
    /// `k -> <sum_{i<=k} S_i S_i* φ, φ>` nondecreasing and at most `<φ, φ>`.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Completeness {
    pub depth: u64,
    /// Exact measure of the part of `X` not covered by the first `depth` ranges.
    pub uncovered: String,
    /// Pointwise `sum S_i S_i* φ = φ`, finite arity only.
    pub pointwise: Option<Deviation>,
    pub entries: Vec<CompletenessEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationReport {
    pub backend: &'static str,
    pub arity: String,
    pub indices: usize,
    pub sample_nodes: usize,
    pub functions: Vec<String>,
    /// `S_i* S_j φ - δ_ij φ`
    pub isometry: Deviation,
    /// `S_i S_i* φ - χ_{R_i} φ`
    pub projection: Deviation,
    pub completeness: Completeness,
    /// `max |<S_i φ, ψ> - <φ, S_i* ψ>|` on the quadrature grid; O(h), not part of `passed`.
    pub adjointness_gap: f64,
    pub grid_step: f64,
    pub passed: bool,
}

/// Cuntz relations of the representation on the given test functions.
///
/// For countable systems, pairwise checks use indices up to `cfg.pair_depth`
/// and completeness uses the system's truncation.
pub fn check_cuntz_relations<S: RootScalar>(
    rep: &Representation,
    tests: &[TestFunction],
    cfg: &CuntzConfig,
) -> Result<RelationReport> {
    if tests.is_empty() {
        return Err(Error::InvalidConfig("no test functions".into()));
    }
    let f = rep.system();
    let depth = f.enumerated();
    let n = match f.arity() {
        Arity::Finite(n) => n,
        Arity::Infinite => (depth as usize).min(cfg.pair_depth),
    };
    let ev = Evaluator::<S>::new(rep, n)?;
    let points = sample_points::<S>(rep, cfg.sample_nodes);

    let mut isometry = Deviation::new();
    let mut projection = Deviation::new();
    for i in 1..=n {
        for j in 1..=n {
            let e = word(vec![Letter::Adj(i), Letter::Gen(j)])?;
            compare(&mut isometry, &ev, &e, tests, &points, |phi, x| {
                Ok(if i == j { phi.eval(x)?.lift() } else { S::root_zero() })
            })?;
        }
        let e = word(vec![Letter::Gen(i), Letter::Adj(i)])?;
        compare(&mut projection, &ev, &e, tests, &points, |phi, x| {
            Ok(if ev.in_range(i, x)? { phi.eval(x)?.lift() } else { S::root_zero() })
        })?;
    }

    let pointwise = match f.arity() {
        Arity::Finite(n) => {
            let sum = OperatorExpr::new(
                (1..=n)
                    .map(|i| Ok((Rational::from_integer(1.into()), OperatorWord::new(vec![Letter::Gen(i), Letter::Adj(i)])?)))
                    .collect::<Result<Vec<_>>>()?,
            )?;
            let mut dev = Deviation::new();
            compare(&mut dev, &ev, &sum, tests, &points, |phi, x| Ok(phi.eval(x)?.lift()))?;
            Some(dev)
        }
        Arity::Infinite => None,
    };
    let (entries, uncovered) = completeness_quadrature(rep, tests, depth as usize, cfg.grid)?;
    let completeness = Completeness { depth, uncovered: format_rational(&uncovered), pointwise, entries };

    let adjointness_gap = adjointness(rep, tests, n.min(8), cfg.grid)?;
    let passed = isometry.ok(S::EXACT)
        && projection.ok(S::EXACT)
        && completeness.pointwise.as_ref().is_none_or(|d| d.ok(S::EXACT))
        && completeness.entries.iter().all(|e| e.monotone && e.residual_sq <= e.bound);
    Ok(RelationReport {
        backend: backend::<S>(),
        arity: f.arity().to_string(),
        indices: n,
        sample_nodes: cfg.sample_nodes,
        functions: tests.iter().map(|t| t.to_string()).collect(),
        isometry,
        projection,
        completeness,
        adjointness_gap,
        grid_step: f64::from_rational(&f.ambient().length()) / cfg.grid as f64,
        passed,
    })
}

fn completeness_quadrature(
    rep: &Representation,
    tests: &[TestFunction],
    depth: usize,
    m: usize,
) -> Result<(Vec<CompletenessEntry>, Rational)> {
    let f = rep.system();
    let mut covered = Rational::from_integer(0.into());
    for i in 1..=depth {
        covered += f.range(i)?.length();
    }
    let uncovered = f.ambient().length() - covered;
    let gap = f64::from_rational(&uncovered);
    let xs = nodes_f64(f.ambient(), m);
    let h = f64::from_rational(&f.ambient().length()) / m as f64;
    let ev = Evaluator::<f64>::new(rep, depth)?;
    let projections = (1..=depth)
        .map(|i| word(vec![Letter::Gen(i), Letter::Adj(i)]))
        .collect::<Result<Vec<_>>>()?;

    // per node: the nonzero projection terms `(k, sqrt(weight), moved point)`;
    // ranges are disjoint, so there is at most one for partitions
    let paths = xs
        .par_iter()
        .map(|x| {
            let mut found = Vec::new();
            for (k, e) in projections.iter().enumerate() {
                if !ev.in_range(k + 1, x)? {
                    continue;
                }
                for (_, w) in e.terms() {
                    if let Some((weight, y)) = ev.path(w, x)? {
                        found.push((k, weight.sqrt(), y));
                    }
                }
            }
            Ok(found)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(tests.len());
    for phi in tests {
        let values: Vec<f64> = xs.iter().map(|x| phi.eval(x)).collect::<Result<_>>()?;
        let mut shares = vec![Vec::new(); depth];
        let mut sums = Vec::with_capacity(xs.len());
        for (found, v) in paths.iter().zip(&values) {
            let mut terms = Vec::with_capacity(found.len());
            for (k, root, y) in found {
                let t = root * phi.eval(y)?;
                shares[*k].push(t * v);
                terms.push(t);
            }
            sums.push(f64::total(terms));
        }
        let residual_sq = h * f64::total(sums.iter().zip(&values).map(|(s, v)| (s - v) * (s - v)));
        let norm_sq = h * f64::total(values.iter().map(|v| v * v));
        let mut monotone = true;
        let mut partial = 0.0;
        for share in shares {
            let share = h * f64::total(share);
            if share < 0.0 {
                monotone = false;
            }
            partial += share;
        }
        if partial > norm_sq * (1.0 + FLOAT_TOLERANCE) {
            monotone = false;
        }
        let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let bound = if gap > 0.0 { sup * sup * (gap + h) } else { FLOAT_TOLERANCE * FLOAT_TOLERANCE };
        entries.push(CompletenessEntry { function: phi.to_string(), residual_sq, bound, monotone });
    }
    Ok((entries, uncovered))
}

/// Largest `|<S_i φ, ψ> - <φ, S_i* ψ>|` over `i <= n` and pairs of test functions.
fn adjointness(rep: &Representation, tests: &[TestFunction], n: usize, m: usize) -> Result<f64> {
    let f = rep.system();
    let xs = nodes_f64(f.ambient(), m);
    let h = f64::from_rational(&f.ambient().length()) / m as f64;
    let ev = Evaluator::<f64>::new(rep, n)?;
    let plain: Vec<Vec<f64>> =
        tests.iter().map(|t| xs.iter().map(|x| t.eval(x)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let mut gap = 0.0f64;
    for i in 1..=n {
        // rows are nodes, columns test functions
        let sample = |l: Letter| -> Result<Vec<Vec<f64>>> {
            let e = word(vec![l])?;
            xs.par_iter().map(|x| ev.eval_expr_many(&e, tests, x)).collect()
        };
        let gens = sample(Letter::Gen(i))?;
        let adjs = sample(Letter::Adj(i))?;
        for (a, phi) in plain.iter().enumerate() {
            for (b, psi) in plain.iter().enumerate() {
                let left = h * f64::total(gens.iter().zip(psi).map(|(p, q)| p[a] * q));
                let right = h * f64::total(phi.iter().zip(&adjs).map(|(p, q)| p * q[b]));
                gap = gap.max((left - right).abs());
            }
        }
    }
    Ok(gap)
}

fn require_pair(rep: &Representation) -> Result<()> {
    match rep.system().arity() {
        Arity::Finite(2) => Ok(()),
        a => Err(Error::ArityMismatch { expected: "2".into(), found: a.to_string() }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub backend: &'static str,
    pub nmax: usize,
    pub sample_nodes: usize,
    pub functions: Vec<String>,
    /// `S_2^{n-1} S_1 φ - S(g_n) φ`
    pub deviation: Deviation,
    /// `f_2^{n-1} ∘ f_1` equals `g_n` as a projective coefficient matrix for every `n`.
    pub coefficients_match: bool,
    pub mismatched: Vec<usize>,
    pub passed: bool,
}

/// Compares the words `S_2^{n-1} S_1` of `base` with the generators of
/// `partner`, whose branches should be `g_n = f_2^{n-1} ∘ f_1`.
pub fn check_embedding<S: RootScalar>(
    base: &Representation,
    partner: &Representation,
    nmax: usize,
    tests: &[TestFunction],
    cfg: &CuntzConfig,
) -> Result<EmbeddingReport> {
    require_pair(base)?;
    if base.system().ambient() != partner.system().ambient() {
        return Err(Error::GridMismatch("base and partner live on different intervals".into()));
    }
    let ev = Evaluator::<S>::new(base, 2)?;
    let pev = Evaluator::<S>::new(partner, nmax)?;
    let points = sample_points::<S>(base, cfg.sample_nodes);
    let mut deviation = Deviation::new();
    let mut mismatched = Vec::new();
    for n in 1..=nmax {
        let w: OperatorExpr = embedding_word(n)?.into();
        let g: OperatorExpr = OperatorWord::gen(n)?.into();
        compare(&mut deviation, &ev, &w, tests, &points, |phi, x| pev.eval_expr(&g, phi, x))?;
        let mut letters = vec![2; n - 1];
        letters.push(1);
        let composed = compose_branches(base.system(), &letters)?;
        if !composed.map().projectively_eq(&partner.system().branch(n)?) {
            mismatched.push(n);
        }
    }
    let passed = deviation.ok(S::EXACT) && mismatched.is_empty();
    Ok(EmbeddingReport {
        backend: backend::<S>(),
        nmax,
        sample_nodes: cfg.sample_nodes,
        functions: tests.iter().map(|t| t.to_string()).collect(),
        deviation,
        coefficients_match: mismatched.is_empty(),
        mismatched,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordRelationReport {
    pub backend: &'static str,
    pub nmax: usize,
    pub sample_nodes: usize,
    pub functions: Vec<String>,
    /// `w_n* w_m φ - δ_nm φ`
    pub deviation: Deviation,
    pub passed: bool,
}

/// The words `w_n = S_2^{n-1}(S_1 S_2 S_1* + S_1 S_1 S_2*)` against the
/// relations `w_n* w_m = δ_nm I`.
pub fn check_alternative_embedding<S: RootScalar>(
    rep: &Representation,
    nmax: usize,
    tests: &[TestFunction],
    cfg: &CuntzConfig,
) -> Result<WordRelationReport> {
    require_pair(rep)?;
    let ev = Evaluator::<S>::new(rep, 2)?;
    let points = sample_points::<S>(rep, cfg.sample_nodes);
    let words = (1..=nmax).map(alternative_embedding).collect::<Result<Vec<_>>>()?;
    let mut deviation = Deviation::new();
    for (a, wn) in words.iter().enumerate() {
        for (b, wm) in words.iter().enumerate() {
            let e = wn.adjoint().product(wm);
            compare(&mut deviation, &ev, &e, tests, &points, |phi, x| {
                Ok(if a == b { phi.eval(x)?.lift() } else { S::root_zero() })
            })?;
        }
    }
    Ok(WordRelationReport {
        backend: backend::<S>(),
        nmax,
        sample_nodes: cfg.sample_nodes,
        functions: tests.iter().map(|t| t.to_string()).collect(),
        passed: deviation.ok(S::EXACT),
        deviation,
    })
}
