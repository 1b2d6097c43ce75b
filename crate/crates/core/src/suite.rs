//! The `verify-all` suite over the catalog jump pairs, and figure samples.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::branching::{BranchSystem, DEFAULT_TRUNCATION};
use crate::catalog::{get_entry_with, jump_pairs, CatalogEntry};
use crate::cuntz::{
    check_alternative_embedding, check_cuntz_relations, check_embedding, standard_test_functions, CuntzConfig,
    RootScalar,
};
use crate::error::{Error, Result};
use crate::grid::{nodes_f64, DEFAULT_GRID};
use crate::interval_dynamics::{CompiledMap, Interval, Moebius, PiecewiseMap};
use crate::jump::{check_jump_equals, JumpSpec, DEFAULT_ENTRY_CAP};
use crate::measure::{induced_measure, Density, invariance_residual, transport_density, truncation_for_bound};
use crate::samples::{float_samples, midpoints, rational_samples, DEFAULT_SEED};
use crate::scalar::{parse_rational, rat, Rational, Scalar};

/// Points per figure.
pub const FIGURE_SAMPLES: usize = 1024;
/// Largest denominator of the exact jump samples.
pub const SAMPLE_DENOMINATOR: i64 = 10_000;
/// Normalized truncation tail allowed in invariance checks of countable systems.
pub const TAIL_TARGET: f64 = 1e-6;
/// Tolerance of the induced-measure comparison.
pub const INDUCED_TOLERANCE: f64 = 1e-10;
/// Truncations above this are summed in `f64` even on the exact backend.
pub const EXACT_TERM_LIMIT: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            _ => Err(Error::InvalidConfig(format!("backend must be exact or float, not `{s}`"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        })
    }
}

/// Replaces branch `index` of a catalog entry before the checks run.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchOverride {
    pub entry: String,
    pub index: usize,
    pub branch: Moebius,
}

impl FromStr for BranchOverride {
    type Err = Error;
    /// `name:i:a,b,c,d`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("override `{s}` is not of the form name:i:a,b,c,d"));
        let mut parts = s.splitn(3, ':');
        let (Some(entry), Some(index), Some(coeffs)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let index = index.parse().map_err(|_| bad())?;
        let c = coeffs.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
        let [a, b, cc, d]: [Rational; 4] = c.try_into().map_err(|_| bad())?;
        Ok(BranchOverride { entry: entry.to_string(), index, branch: Moebius::new(a, b, cc, d)? })
    }
}

impl fmt::Display for BranchOverride {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.entry, self.index, self.branch.coefficient_strings().join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub backend: Backend,
    pub grid: usize,
    pub truncation: u64,
    pub entry_cap: u64,
    pub seed: u64,
    /// Jump-equivalence samples per pair.
    pub samples: usize,
    pub overrides: Vec<BranchOverride>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: Backend::Exact,
            grid: DEFAULT_GRID,
            truncation: DEFAULT_TRUNCATION,
            entry_cap: DEFAULT_ENTRY_CAP,
            seed: DEFAULT_SEED,
            samples: 10_000,
            overrides: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 nodes".into()));
        }
        if self.truncation < 1 {
            return Err(Error::InvalidConfig("truncation must be at least 1".into()));
        }
        if self.entry_cap < 1 {
            return Err(Error::InvalidConfig("entry cap must be at least 1".into()));
        }
        Ok(())
    }

    /// Catalog entry with any overrides applied.
    pub fn entry(&self, name: &str) -> Result<CatalogEntry> {
        let mut e = get_entry_with(name, self.truncation)?;
        for o in self.overrides.iter().filter(|o| o.entry == name) {
            e = e.with_branch(o.index, o.branch.clone())?;
        }
        Ok(e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub backend: Backend,
    pub grid: usize,
    pub truncation: u64,
    pub entry_cap: u64,
    pub seed: u64,
    pub samples: usize,
    pub overrides: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairReport {
    pub base: String,
    pub jump: String,
    pub checks: Vec<CheckResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: ConfigSummary,
    pub pairs: Vec<PairReport>,
    pub passed: bool,
    /// `pair/check` of the first failing check.
    pub first_failure: Option<String>,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check(name: &str, passed: bool, detail: impl Serialize) -> Result<CheckResult> {
    Ok(CheckResult { name: name.into(), passed, detail: serde_json::to_value(detail)? })
}

/// Runs every check on the three jump pairs. Sub-checks may run in parallel;
/// results are assembled in a fixed order, so equal configs give equal reports.
pub fn run_verify_all(cfg: &RunConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut pairs = Vec::new();
    for (base_name, jump_name) in jump_pairs() {
        let base = cfg.entry(base_name)?;
        let jump = cfg.entry(jump_name)?;
        let checks = match cfg.backend {
            Backend::Exact => {
                let s = rational_samples(base.map.ambient(), cfg.samples, SAMPLE_DENOMINATOR, cfg.seed);
                pair_checks::<Rational>(cfg, &base, &jump, &s)?
            }
            Backend::Float => {
                let s = float_samples(1e-3, 1.0, cfg.samples, cfg.seed);
                pair_checks::<f64>(cfg, &base, &jump, &s)?
            }
        };
        pairs.push(PairReport { base: base_name.into(), jump: jump_name.into(), checks });
    }
    let failures: Vec<String> = pairs
        .iter()
        .flat_map(|p| p.checks.iter().filter(|c| !c.passed).map(move |c| format!("{}/{}", p.base, c.name)))
        .collect();
    Ok(SuiteReport {
        config: ConfigSummary {
            backend: cfg.backend,
            grid: cfg.grid,
            truncation: cfg.truncation,
            entry_cap: cfg.entry_cap,
            seed: cfg.seed,
            samples: cfg.samples,
            overrides: cfg.overrides.iter().map(|o| o.to_string()).collect(),
        },
        passed: failures.is_empty(),
        first_failure: failures.first().cloned(),
        failures,
        pairs,
    })
}

fn pair_checks<S: RootScalar>(cfg: &RunConfig, base: &CatalogEntry, jump: &CatalogEntry, samples: &[S]) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let target = base.branch_system.range(1)?;

    // jump by iteration against the closed form
    let spec = JumpSpec::new(base.map.clone(), target.clone(), cfg.entry_cap)?;
    let eq = check_jump_equals(&spec, &jump.map, samples);
    let enough = eq.compared * 100 >= eq.samples * 99;
    let close = if S::EXACT { eq.exact_zero } else { eq.max_deviation <= 1e-9 };
    out.push(check("jump_equivalence", enough && close && eq.compared > 0, &eq)?);

    // Cuntz relations of both representations
    let tests = standard_test_functions();
    let ccfg = CuntzConfig { grid: cfg.grid, ..CuntzConfig::default() };
    let base_rep = base.representation()?;
    let jump_rep = jump.representation()?;
    let r = check_cuntz_relations::<S>(&base_rep, &tests, &ccfg)?;
    out.push(check("cuntz_relations_base", r.passed, &r)?);
    let r = check_cuntz_relations::<S>(&jump_rep, &tests, &ccfg)?;
    out.push(check("cuntz_relations_jump", r.passed, &r)?);

    // S_2^{n-1} S_1 against the jump generators, and the alternative words
    let e = check_embedding::<S>(&base_rep, &jump_rep, 20, &tests, &ccfg)?;
    out.push(check("embedding", e.passed, &e)?);
    let w = check_alternative_embedding::<S>(&base_rep, 8, &tests, &ccfg)?;
    out.push(check("alternative_embedding", w.passed, &w)?);

    // density transport
    let phi = base.invariant_density.clone().ok_or_else(|| Error::InvalidConfig(format!("{} has no density", base.name)))?;
    let psi = jump.invariant_density.clone().ok_or_else(|| Error::InvalidConfig(format!("{} has no density", jump.name)))?;
    let moved = transport_density(&base.branch_system, &phi)?;
    let same = moved.projectively_eq(&psi);
    out.push(check(
        "transport",
        same,
        json!({ "from": phi.formula(), "transported": moved.formula(), "expected": psi.formula(), "projectively_equal": same }),
    )?);

    // invariance of both densities
    let points = midpoints(base.map.ambient(), 25);
    let r = invariance_check::<S>(&base.branch_system, &phi, &points)?;
    out.push(check("invariance_base", r.0, &r.1)?);
    let r = invariance_check::<S>(&jump.branch_system, &psi, &points)?;
    out.push(check("invariance_jump", r.0, &r.1)?);

    // ν(E) = μ(T^{-1}(E) ∩ A) against ∫_E ψ over dyadic E
    let mut worst = 0.0f64;
    let mut worst_e = None;
    let mut count = 0;
    for depth in 0..=6u32 {
        let n = 1i64 << depth;
        for j in 0..n {
            let e = Interval::new(rat(j, n), rat(j + 1, n))?;
            let nu = induced_measure(&base.map, &target, &phi, &e)?;
            let direct = moved.integral(e.lo(), e.hi())?;
            count += 1;
            let d = (nu - direct).abs();
            if worst_e.is_none() || d > worst {
                worst = d;
                worst_e = Some(e.to_string());
            }
        }
    }
    out.push(check(
        "induced_measure",
        worst <= INDUCED_TOLERANCE,
        json!({ "intervals": count, "max_deviation": worst, "worst_interval": worst_e, "tolerance": INDUCED_TOLERANCE }),
    )?);
    Ok(out)
}

/// Invariance at the given points; countable systems use the truncation whose
/// tail bound is at most [`TAIL_TARGET`].
pub fn invariance_check<S: Scalar>(
    f: &BranchSystem,
    phi: &Density,
    points: &[Rational],
) -> Result<(bool, Value)> {
    let k = truncation_for_bound(f, phi, TAIL_TARGET)?;
    let exact = S::EXACT && k <= EXACT_TERM_LIMIT;
    let report = if exact {
        invariance_residual::<Rational>(f, phi, points, Some(k))?
    } else {
        let xs: Vec<f64> = points.iter().map(f64::from_rational).collect();
        invariance_residual::<f64>(f, phi, &xs, Some(k))?
    };
    let passed = if exact { report.exact_zero } else { report.max_excess <= 1e-12 };
    let mut detail = serde_json::to_value(&report)?;
    detail["arithmetic"] = json!(if exact { "exact" } else { "float" });
    Ok((passed, detail))
}

/// `(x, T(x))` at [`FIGURE_SAMPLES`] midpoints.
pub fn emit_figure(name: &str, cfg: &RunConfig) -> Result<Vec<(f64, f64)>> {
    let e = cfg.entry(name)?;
    figure_of(&e.map)
}

pub fn figure_of(map: &PiecewiseMap) -> Result<Vec<(f64, f64)>> {
    let compiled = CompiledMap::<f64>::new(map, 4096);
    nodes_f64(map.ambient(), FIGURE_SAMPLES).into_iter().map(|x| Ok((x, compiled.eval(&x)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(backend: Backend) -> RunConfig {
        RunConfig { backend, samples: 300, grid: 512, ..RunConfig::default() }
    }

    #[test]
    fn default_suite_passes_on_both_backends() {
        for b in [Backend::Exact, Backend::Float] {
            let r = run_verify_all(&quick(b)).unwrap();
            assert!(r.passed, "{b}: {:?}", r.failures);
            assert_eq!(r.pairs.len(), 3);
        }
    }

    #[test]
    fn corrupted_tent_fails_isometry() {
        let mut cfg = quick(Backend::Exact);
        cfg.overrides.push("tent:1:-3/5,1,0,1".parse().unwrap());
        let r = run_verify_all(&cfg).unwrap();
        assert!(!r.passed);
        assert!(r.failures.iter().any(|f| f == "tent/cuntz_relations_base"), "{:?}", r.failures);
        let tent = r.pairs.iter().find(|p| p.base == "tent").unwrap();
        let c = tent.checks.iter().find(|c| c.name == "cuntz_relations_base").unwrap();
        assert_eq!(c.detail["isometry"]["exact_zero"], json!(false));
        assert!(r.pairs.iter().filter(|p| p.base != "tent").all(|p| p.checks.iter().all(|c| c.passed)));
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = quick(Backend::Float);
        assert_eq!(run_verify_all(&cfg).unwrap().to_json().unwrap(), run_verify_all(&cfg).unwrap().to_json().unwrap());
    }

    #[test]
    fn config_validation_and_parsing() {
        assert!(RunConfig { grid: 1, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { entry_cap: 0, ..RunConfig::default() }.validate().is_err());
        assert!("tent:1:1,2".parse::<BranchOverride>().is_err());
        assert_eq!("tent:1:-3/5,1,0,1".parse::<BranchOverride>().unwrap().to_string(), "tent:1:-3/5,1,0,1");
        assert!("fast".parse::<Backend>().is_err());
    }

    #[test]
    fn figures() {
        let cfg = RunConfig::default();
        let farey = emit_figure("farey", &cfg).unwrap();
        assert_eq!(farey.len(), FIGURE_SAMPLES);
        // σ_1 peaks at 1 near x = 1/2
        let peak = farey.iter().fold(0.0f64, |a, (_, y)| a.max(*y));
        assert!(peak > 0.99 && peak <= 1.0);
        let tent = emit_figure("tent", &cfg).unwrap();
        assert!(tent.iter().all(|(x, y)| (y - (1.0 - (2.0 * x - 1.0).abs())).abs() < 1e-15));
        assert!(matches!(emit_figure("nope", &cfg), Err(Error::UnknownEntry(_))));
    }
}
