use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::interval_dynamics::{eval_coeffs, inverse_coeffs, Coeffs, PiecewiseMap};
use crate::measure::Density;
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct UlamConfig {
    pub cells: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Family pieces beyond this index are folded into the last one.
    pub max_family_pieces: u64,
}

impl UlamConfig {
    pub fn new(cells: usize) -> Self {
        UlamConfig { cells, tolerance: 1e-13, max_iterations: 10_000, max_family_pieces: 4 * cells as u64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UlamResult {
    /// Cell probabilities, summing to one.
    pub masses: Vec<f64>,
    pub iterations: usize,
    pub change: f64,
    pub pieces_used: u64,
}

impl UlamResult {
    /// Piecewise-constant density `mass / h` at the cell midpoints.
    pub fn density(&self, map: &PiecewiseMap) -> Result<GridFunction<f64>> {
        let h = f64::from_rational(&map.ambient().length()) / self.masses.len() as f64;
        GridFunction::new(map.ambient().clone(), self.masses.iter().map(|m| m / h).collect())
    }
}

/// A branch `x -> g(x)` with domain `[lo, hi]`, in floating point.
struct Piece {
    lo: f64,
    hi: f64,
    /// the map on this piece
    map: Coeffs<f64>,
    /// its inverse, the branch
    branch: Coeffs<f64>,
    family: bool,
}

fn collect_pieces(t: &PiecewiseMap, max_family: u64, min_length: f64) -> Vec<Piece> {
    let mut out: Vec<Piece> = t
        .pieces()
        .iter()
        .map(|p| {
            let (lo, hi) = p.domain().to_f64();
            let map = f64::coeffs(p.map());
            Piece { lo, hi, branch: inverse_coeffs(&map), map, family: false }
        })
        .collect();
    if let Some(f) = t.family() {
        let (alo, ahi) = t.ambient().to_f64();
        let lifted = f.rule.lift::<f64>();
        for k in 1..=max_family {
            let g = lifted.nth(k);
            let (Ok(p), Ok(q)) = (eval_coeffs(&g, &alo), eval_coeffs(&g, &ahi)) else { break };
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            if !(hi - lo > min_length) {
                break;
            }
            out.push(Piece { lo, hi, map: inverse_coeffs(&g), branch: g, family: true });
        }
    }
    out
}

/// Invariant density of the Ulam discretization of `t` on `cells` equal cells.
///
/// Entries `|cell_j ∩ T^{-1}(cell_i)| / |cell_j|` are computed from the branch
/// inverses in closed form; the left fixed vector is found by power iteration.
pub fn ulam_density(t: &PiecewiseMap, cfg: &UlamConfig) -> Result<UlamResult> {
    let m = cfg.cells;
    if m < 2 {
        return Err(Error::InvalidConfig("Ulam needs at least 2 cells".into()));
    }
    let (a0, a1) = t.ambient().to_f64();
    let h = (a1 - a0) / m as f64;
    let pieces = collect_pieces(t, cfg.max_family_pieces, h * 1e-18);
    let cell_of = |x: f64| (((x - a0) / h).floor().max(0.0) as usize).min(m - 1);

    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (idx, p) in pieces.iter().enumerate() {
        for row in by_row.iter_mut().take(cell_of(p.hi) + 1).skip(cell_of(p.lo)) {
            row.push(idx);
        }
    }

    let rows: Vec<Vec<(u32, f64)>> = by_row
        .par_iter()
        .enumerate()
        .map(|(j, list)| {
            let (ca, cb) = (a0 + j as f64 * h, a0 + (j + 1) as f64 * h);
            let mut dense = vec![0.0f64; m];
            let mut last_family: Option<Vec<(usize, f64)>> = None;
            for &idx in list {
                let p = &pieces[idx];
                let (u, v) = (p.lo.max(ca), p.hi.min(cb));
                if v <= u {
                    continue;
                }
                let (Ok(s), Ok(t)) = (eval_coeffs(&p.map, &u), eval_coeffs(&p.map, &v)) else { continue };
                let (s, t) = if s <= t { (s, t) } else { (t, s) };
                let mut contrib = Vec::new();
                for i in cell_of(s)..=cell_of(t) {
                    let (ya, yb) = ((a0 + i as f64 * h).max(s), (a0 + (i + 1) as f64 * h).min(t));
                    if yb <= ya {
                        continue;
                    }
                    let (Ok(xa), Ok(xb)) = (eval_coeffs(&p.branch, &ya), eval_coeffs(&p.branch, &yb)) else { continue };
                    let w = (xb - xa).abs() / h;
                    dense[i] += w;
                    contrib.push((i, w));
                }
                if p.family {
                    last_family = Some(contrib);
                }
            }
            let total: f64 = f64::total(dense.iter().copied());
            let deficit = 1.0 - total;
            if deficit > 1e-12 {
                if let Some(c) = last_family.filter(|c| !c.is_empty()) {
                    let s: f64 = c.iter().map(|(_, w)| w).sum();
                    for (i, w) in c {
                        dense[i] += deficit * w / s;
                    }
                }
            }
            dense.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, w)| (i as u32, *w)).collect()
        })
        .collect();

    let mut p = vec![1.0 / m as f64; m];
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        let mut next = vec![0.0f64; m];
        for (j, row) in rows.iter().enumerate() {
            let pj = p[j];
            if pj == 0.0 {
                continue;
            }
            for &(i, w) in row {
                next[i as usize] += pj * w;
            }
        }
        let s = f64::total(next.iter().copied());
        next.iter_mut().for_each(|v| *v /= s);
        change = f64::total(next.iter().zip(&p).map(|(a, b)| (a - b).abs()));
        p = next;
        if change <= cfg.tolerance {
            return Ok(UlamResult {
                masses: p,
                iterations: it,
                change,
                pieces_used: pieces.len() as u64,
            });
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_iterations, change })
}

/// `sum_j |mass_j - ∫_{cell_j} φ|` for the normalized density over equal cells.
pub fn l1_to_cells(masses: &[f64], map: &PiecewiseMap, phi: &Density) -> Result<f64> {
    let n = masses.len() as i64;
    let amb = map.ambient();
    let width = amb.length();
    let edge = |j: i64| -> Rational { amb.lo() + &width * Rational::new(j.into(), n.into()) };
    let terms = (0..n)
        .map(|j| Ok((masses[j as usize] - phi.integral_normalized(&edge(j), &edge(j + 1))?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(f64::total(terms))
}
