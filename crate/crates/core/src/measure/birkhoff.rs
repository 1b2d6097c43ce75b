use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_dynamics::{CompiledMap, PiecewiseMap};
use crate::scalar::{format_rational, Rational, Scalar};

/// Prime denominator of exact orbit starts; 2 is a primitive root modulo it, so
/// doubling-type maps have long periods on `p / q`.
pub const ORBIT_DENOMINATOR: i64 = 1_000_000_000_091;

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitConfig {
    pub steps: u64,
    pub bins: usize,
    pub seed: u64,
    pub start: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    /// Occupation frequencies per bin, summing to one.
    pub frequencies: Vec<f64>,
    pub start: String,
    pub exact_orbit: bool,
}

fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    (((x - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

fn record<S: Scalar>(map: &PiecewiseMap, start: S, cfg: &OrbitConfig) -> Result<Vec<u64>> {
    let compiled = CompiledMap::<S>::new(map, 4096);
    let (lo, hi) = map.ambient().to_f64();
    let fixed: Vec<S> = map.exceptional().iter().map(|(x, _)| S::from_rational(x)).collect();
    let mut counts = vec![0u64; cfg.bins];
    let mut x = start;
    for step in 0..=cfg.steps {
        counts[bin_of(x.as_f64(), lo, hi, cfg.bins)] += 1;
        if step == cfg.steps {
            break;
        }
        if fixed.contains(&x) {
            return Err(Error::OrbitEscape { step, reason: format!("reached exceptional point {}", x.describe()) });
        }
        x = compiled
            .eval(&x)
            .map_err(|e| Error::OrbitEscape { step, reason: e.to_string() })?;
    }
    Ok(counts)
}

/// Occupation histogram of `x_0, T(x_0), ..., T^n(x_0)`.
///
/// Maps with only affine pieces are iterated in exact rationals from
/// `p / ORBIT_DENOMINATOR`: in floating point a doubling map collapses to 0
/// within about 60 steps. Other maps run in `f64`.
pub fn birkhoff_histogram(map: &PiecewiseMap, cfg: &OrbitConfig) -> Result<Histogram> {
    if cfg.bins == 0 {
        return Err(Error::InvalidConfig("need at least one bin".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let amb = map.ambient();
    let exact = map.is_affine();
    let (counts, start) = if exact {
        let x0 = cfg.start.clone().unwrap_or_else(|| {
            let p = rng.gen_range(1..ORBIT_DENOMINATOR);
            amb.lo() + amb.length() * Rational::new(BigInt::from(p), BigInt::from(ORBIT_DENOMINATOR))
        });
        (record::<Rational>(map, x0.clone(), cfg)?, format_rational(&x0))
    } else {
        let x0 = match &cfg.start {
            Some(r) => f64::from_rational(r),
            None => {
                let (lo, hi) = amb.to_f64();
                rng.gen_range(lo..hi)
            }
        };
        (record::<f64>(map, x0, cfg)?, format!("{x0:e}"))
    };
    let total = (cfg.steps + 1) as f64;
    let frequencies = counts.iter().map(|c| *c as f64 / total).collect();
    Ok(Histogram { counts, frequencies, start, exact_orbit: exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_dynamics::{piece, Interval, Moebius};
    use crate::measure::{l1_to_cells, Density};
    use crate::scalar::{int, rat};

    fn tent() -> PiecewiseMap {
        PiecewiseMap::finite(
            Interval::unit(),
            vec![
                piece(Interval::new(rat(1, 2), int(1)).unwrap(), Moebius::ints(-2, 2, 0, 1)).unwrap(),
                piece(Interval::new(int(0), rat(1, 2)).unwrap(), Moebius::ints(2, 0, 0, 1)).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn tent_orbit_is_exact_and_flat() {
        let cfg = OrbitConfig { steps: 50_000, bins: 16, seed: 3, start: None };
        let h = birkhoff_histogram(&tent(), &cfg).unwrap();
        assert!(h.exact_orbit);
        assert_eq!(h.counts.iter().sum::<u64>(), 50_001);
        assert!(l1_to_cells(&h.frequencies, &tent(), &Density::lebesgue()).unwrap() < 0.05);
        assert_eq!(h, birkhoff_histogram(&tent(), &cfg).unwrap());
    }

    #[test]
    fn fixed_point_start_escapes() {
        let cfg = OrbitConfig { steps: 10, bins: 4, seed: 0, start: Some(int(0)) };
        let pinned = PiecewiseMap::new(
            Interval::unit(),
            tent().pieces().to_vec(),
            None,
            vec![(int(0), int(0))],
        )
        .unwrap();
        assert!(matches!(birkhoff_histogram(&pinned, &cfg), Err(Error::OrbitEscape { step: 0, .. })));
    }
}
