//! Functions sampled at the midpoints of a uniform partition.

use crate::error::{Error, Result};
use crate::interval_dynamics::Interval;
use crate::scalar::{int, Rational, Scalar};

pub const DEFAULT_GRID: usize = 4096;

/// Values at the `m` midpoints `lo + (j + 1/2) h`, `h = |ambient| / m`, with
/// uniform quadrature weight `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<V> {
    ambient: Interval,
    values: Vec<V>,
}

/// Exact midpoint node `j` of an `m`-cell partition.
pub fn node(ambient: &Interval, m: usize, j: usize) -> Rational {
    ambient.lo() + ambient.length() * Rational::new((2 * j + 1).into(), (2 * m).into())
}

pub fn nodes(ambient: &Interval, m: usize) -> Vec<Rational> {
    (0..m).map(|j| node(ambient, m, j)).collect()
}

pub fn nodes_f64(ambient: &Interval, m: usize) -> Vec<f64> {
    let (lo, hi) = ambient.to_f64();
    let h = (hi - lo) / m as f64;
    (0..m).map(|j| lo + (j as f64 + 0.5) * h).collect()
}

impl<V> GridFunction<V> {
    pub fn new(ambient: Interval, values: Vec<V>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::GridMismatch(format!("need at least 2 nodes, got {}", values.len())));
        }
        Ok(GridFunction { ambient, values })
    }

    /// Samples `f` at the exact nodes.
    pub fn from_exact(ambient: &Interval, m: usize, f: impl Fn(&Rational) -> Result<V>) -> Result<Self> {
        let values = nodes(ambient, m).iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(ambient.clone(), values)
    }

    pub fn ambient(&self) -> &Interval {
        &self.ambient
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes(&self) -> Vec<Rational> {
        nodes(&self.ambient, self.values.len())
    }

    pub fn step(&self) -> f64 {
        f64::from_rational(&(self.ambient.length() / int(self.values.len() as i64)))
    }

    pub fn same_grid<W>(&self, other: &GridFunction<W>) -> Result<()> {
        if self.ambient != other.ambient || self.values.len() != other.values.len() {
            return Err(Error::GridMismatch(format!(
                "{} nodes on {} vs {} nodes on {}",
                self.values.len(),
                self.ambient,
                other.values.len(),
                other.ambient
            )));
        }
        Ok(())
    }

    pub fn map<W>(&self, f: impl Fn(&V) -> W) -> GridFunction<W> {
        GridFunction { ambient: self.ambient.clone(), values: self.values.iter().map(f).collect() }
    }
}

impl GridFunction<f64> {
    pub fn from_f64(ambient: &Interval, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(ambient.clone(), nodes_f64(ambient, m).into_iter().map(f).collect())
    }

    /// Linear interpolation between nodes, constant beyond the outer nodes.
    pub fn interpolate(&self, x: f64) -> f64 {
        let (lo, hi) = self.ambient.to_f64();
        let m = self.values.len();
        let h = (hi - lo) / m as f64;
        let t = (x - lo) / h - 0.5;
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= (m - 1) as f64 {
            return self.values[m - 1];
        }
        let j = t.floor() as usize;
        let w = t - j as f64;
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `sum_j h |v_j|`.
    pub fn l1_norm(&self) -> f64 {
        self.step() * f64::total(self.values.iter().map(|v| v.abs()))
    }

    pub fn sum(&self) -> f64 {
        f64::total(self.values.iter().copied())
    }
}

/// `sum_j h φ_j ψ_j`; values are real so no conjugation is needed.
pub fn inner_product(phi: &GridFunction<f64>, psi: &GridFunction<f64>) -> Result<f64> {
    phi.same_grid(psi)?;
    let h = phi.step();
    Ok(h * f64::total(phi.values.iter().zip(&psi.values).map(|(a, b)| a * b)))
}

/// `x,value` rows with a header line.
pub fn xy_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("x,value\n");
    for (x, v) in rows {
        out.push_str(&format!("{x},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn inner_products() {
        let unit = Interval::unit();
        let one = GridFunction::from_f64(&unit, 4096, |_| 1.0).unwrap();
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-15);
        let step = GridFunction::from_f64(&unit, 4096, |x| if x < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let h = step.step();
        assert!((inner_product(&step, &one).unwrap() - 0.5).abs() <= h);
        let other = GridFunction::from_f64(&unit, 100, |_| 1.0).unwrap();
        assert!(matches!(inner_product(&one, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn exact_nodes_are_midpoints() {
        assert_eq!(nodes(&Interval::unit(), 4), vec![rat(1, 8), rat(3, 8), rat(5, 8), rat(7, 8)]);
    }

    #[test]
    fn interpolation_is_exact_on_lines_and_clamped() {
        let g = GridFunction::from_f64(&Interval::unit(), 64, |x| 3.0 * x + 1.0).unwrap();
        assert!((g.interpolate(0.4) - 2.2).abs() < 1e-14);
        assert_eq!(g.interpolate(0.0), g.values()[0]);
        assert_eq!(g.interpolate(1.0), g.values()[63]);
    }

    #[test]
    fn csv_has_header() {
        assert_eq!(xy_csv(&[(0.5, 1.0), (0.25, -2.5)]), "x,value\n0.5,1\n0.25,-2.5\n");
    }

    #[test]
    fn too_small_grid_rejected() {
        assert!(GridFunction::new(Interval::unit(), vec![1.0]).is_err());
    }
}
