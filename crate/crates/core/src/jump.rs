//! First entry times and jump transformations `J(x) = T^{e(x)+1}(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_dynamics::{Interval, PiecewiseMap};
use crate::scalar::{Rational, Scalar};

pub const DEFAULT_ENTRY_CAP: u64 = 100_000;

/// A map `T` together with the target set `A` of the jump transformation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpSpec {
    base: PiecewiseMap,
    target: Interval,
    entry_cap: u64,
}

impl JumpSpec {
    pub fn new(base: PiecewiseMap, target: Interval, entry_cap: u64) -> Result<Self> {
        if entry_cap == 0 {
            return Err(Error::InvalidConfig("entry cap must be at least 1".into()));
        }
        if !base.ambient().contains_interval(&target) {
            return Err(Error::InvalidConfig(format!("target {target} is not inside {}", base.ambient())));
        }
        Ok(JumpSpec { base, target, entry_cap })
    }

    pub fn base(&self) -> &PiecewiseMap {
        &self.base
    }

    pub fn target(&self) -> &Interval {
        &self.target
    }

    pub fn entry_cap(&self) -> u64 {
        self.entry_cap
    }

    pub fn with_entry_cap(mut self, cap: u64) -> Result<Self> {
        if cap == 0 {
            return Err(Error::InvalidConfig("entry cap must be at least 1".into()));
        }
        self.entry_cap = cap;
        Ok(self)
    }
}

fn entry_with_cap<S: Scalar>(spec: &JumpSpec, x: &S, cap: u64) -> Result<(u64, S)> {
    if !spec.base.ambient().contains(x) {
        return Err(Error::OutOfDomain(x.describe()));
    }
    let mut y = x.clone();
    for k in 0..=cap {
        if spec.target.contains(&y) {
            return Ok((k, y));
        }
        if k < cap {
            y = spec.base.eval_map(&y)?;
        }
    }
    Err(Error::EntryCapExceeded { x: x.describe(), cap })
}

/// `min { k >= 0 : T^k(x) in A }`.
pub fn first_entry_time<S: Scalar>(spec: &JumpSpec, x: &S) -> Result<u64> {
    entry_with_cap(spec, x, spec.entry_cap).map(|(k, _)| k)
}

/// `T^{e(x)+1}(x)` together with `e(x)`.
pub fn jump_with_time<S: Scalar>(spec: &JumpSpec, x: &S) -> Result<(S, u64)> {
    let (k, y) = entry_with_cap(spec, x, spec.entry_cap)?;
    Ok((spec.base.eval_map(&y)?, k))
}

pub fn jump_apply<S: Scalar>(spec: &JumpSpec, x: &S) -> Result<S> {
    jump_with_time(spec, x).map(|(y, _)| y)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub x: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub compared: usize,
    pub excluded: Vec<Exclusion>,
    pub max_deviation: f64,
    /// Every compared sample agreed with zero difference.
    pub exact_zero: bool,
    pub worst_sample: Option<String>,
    pub max_entry_time: u64,
}

/// Compares the jump by iteration against a closed-form map over `samples`.
/// Samples whose orbit does not enter `A` within the cap are excluded and listed.
pub fn check_jump_equals<S: Scalar>(spec: &JumpSpec, closed: &PiecewiseMap, samples: &[S]) -> EquivalenceReport {
    let outcomes: Vec<std::result::Result<(S, u64), String>> = samples
        .par_iter()
        .map(|x| {
            let (jumped, e) = jump_with_time(spec, x).map_err(|e| e.to_string())?;
            let direct = closed.eval_map(x).map_err(|e| format!("closed form: {e}"))?;
            Ok(((jumped - direct).magnitude(), e))
        })
        .collect();
    let mut report = EquivalenceReport {
        samples: samples.len(),
        compared: 0,
        excluded: Vec::new(),
        max_deviation: 0.0,
        exact_zero: true,
        worst_sample: None,
        max_entry_time: 0,
    };
    for (x, outcome) in samples.iter().zip(outcomes) {
        match outcome {
            Ok((dev, e)) => {
                report.compared += 1;
                report.max_entry_time = report.max_entry_time.max(e);
                if !dev.is_nil() {
                    report.exact_zero = false;
                }
                let d = dev.as_f64();
                if d > report.max_deviation || (d.is_nan() && !report.max_deviation.is_nan()) {
                    report.max_deviation = d;
                    report.worst_sample = Some(x.describe());
                }
            }
            Err(reason) => report.excluded.push(Exclusion { x: x.describe(), reason }),
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryReport {
    pub samples: usize,
    pub entered: usize,
    pub fraction: f64,
    pub max_entry_time: u64,
    pub cap: u64,
}

/// Fraction of uniform float samples on `range` (default: the ambient interval)
/// whose orbit enters `A` within `cap` steps.
pub fn check_entry_condition(
    spec: &JumpSpec,
    sample_count: usize,
    cap: u64,
    seed: u64,
    range: Option<(f64, f64)>,
) -> EntryReport {
    let (lo, hi) = range.unwrap_or_else(|| spec.base.ambient().to_f64());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..sample_count).map(|_| rng.gen_range(lo..=hi)).collect();
    let times: Vec<Option<u64>> = xs.par_iter().map(|x| entry_with_cap(spec, x, cap).ok().map(|(k, _)| k)).collect();
    let entered = times.iter().filter(|t| t.is_some()).count();
    EntryReport {
        samples: sample_count,
        entered,
        fraction: if sample_count == 0 { 1.0 } else { entered as f64 / sample_count as f64 },
        max_entry_time: times.iter().flatten().copied().max().unwrap_or(0),
        cap,
    }
}

/// Exact rational convenience wrapper.
pub fn jump_apply_exact(spec: &JumpSpec, x: &Rational) -> Result<Rational> {
    jump_apply(spec, x)
}
