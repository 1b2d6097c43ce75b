//! Deterministic sample sets for the checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interval_dynamics::Interval;
use crate::scalar::{rat, Rational};

/// Default seed of every sampled check.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// `n` rationals `lo + (hi - lo) p/q` with `q <= max_denominator`, drawn from a seeded stream.
pub fn rational_samples(interval: &Interval, n: usize, max_denominator: i64, seed: u64) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = interval.length();
    (0..n)
        .map(|_| {
            let q = rng.gen_range(2..=max_denominator);
            let p = rng.gen_range(0..=q);
            interval.lo() + &width * rat(p, q)
        })
        .collect()
}

/// `n` uniform floats on `[lo, hi]`.
pub fn float_samples(lo: f64, hi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// `n` evenly spaced interior rationals `lo + (hi - lo) (2j - 1) / (2n)`.
pub fn midpoints(interval: &Interval, n: usize) -> Vec<Rational> {
    let width = interval.length();
    (1..=n as i64)
        .map(|j| interval.lo() + &width * rat(2 * j - 1, 2 * n as i64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_samples_are_reproducible_and_inside() {
        let unit = Interval::unit();
        let a = rational_samples(&unit, 100, 50, 7);
        assert_eq!(a, rational_samples(&unit, 100, 50, 7));
        assert!(a.iter().all(|x| unit.contains(x)));
        assert_ne!(a, rational_samples(&unit, 100, 50, 8));
    }

    #[test]
    fn midpoints_of_unit() {
        assert_eq!(midpoints(&Interval::unit(), 2), vec![rat(1, 4), rat(3, 4)]);
    }
}
