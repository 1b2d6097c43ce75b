use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use crate::branching::BranchSystem;
use crate::cuntz::{Letter, OperatorExpr, OperatorWord, TestFunction};
use crate::error::{Error, Result};
use crate::grid::{nodes_f64, GridFunction};
use crate::interval_dynamics::{derivative_coeffs, eval_coeffs, inverse_coeffs, Coeffs, Interval, Moebius, PiecewiseMap};
use crate::scalar::{le, lt, Rational, Scalar};
use crate::surd::Surd;

/// Backends that can hold `sqrt|r|` for their own values `r`.
pub trait RootScalar: Scalar {
    type Root: Clone
        + Debug
        + PartialEq
        + Send
        + Sync
        + Add<Output = Self::Root>
        + Sub<Output = Self::Root>
        + Mul<Output = Self::Root>;

    fn sqrt_abs(&self) -> Self::Root;
    fn lift(&self) -> Self::Root;
    fn root_zero() -> Self::Root;
    fn root_to_f64(r: &Self::Root) -> f64;
}

impl RootScalar for f64 {
    type Root = f64;

    fn sqrt_abs(&self) -> f64 {
        self.abs().sqrt()
    }
    fn lift(&self) -> f64 {
        *self
    }
    fn root_zero() -> f64 {
        0.0
    }
    fn root_to_f64(r: &f64) -> f64 {
        *r
    }
}

impl RootScalar for Rational {
    type Root = Surd;

    fn sqrt_abs(&self) -> Surd {
        Surd::sqrt_abs(self)
    }
    fn lift(&self) -> Surd {
        Surd::from_rational(self.clone())
    }
    fn root_zero() -> Surd {
        Surd::zero()
    }
    fn root_to_f64(r: &Surd) -> f64 {
        r.to_f64()
    }
}

/// The isometries `S_i` of a branching function system on `L^2(X, dx)`.
///
/// `S_i φ(x) = χ_{R_i}(x) sqrt|T'(x)| φ(T(x))` and `S_i* φ(x) = sqrt|f_i'(x)| φ(f_i(x))`.
/// Without an explicit coding map, `T` on `R_i` is `f_i^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    system: BranchSystem,
    coding: Option<PiecewiseMap>,
}

impl Representation {
    pub fn new(system: BranchSystem) -> Self {
        Representation { system, coding: None }
    }

    pub fn with_coding_map(system: BranchSystem, coding: PiecewiseMap) -> Result<Self> {
        if coding.ambient() != system.ambient() {
            return Err(Error::InvalidSystem(format!(
                "coding map lives on {}, branches on {}",
                coding.ambient(),
                system.ambient()
            )));
        }
        Ok(Representation { system, coding: Some(coding) })
    }

    pub fn system(&self) -> &BranchSystem {
        &self.system
    }

    pub fn coding_map(&self) -> Option<&PiecewiseMap> {
        self.coding.as_ref()
    }
}

/// Values a word can act on, evaluated at a point.
pub trait PointFunction<S> {
    fn value_at(&self, x: &S) -> Result<S>;
}

impl<S: Scalar> PointFunction<S> for TestFunction {
    fn value_at(&self, x: &S) -> Result<S> {
        self.eval(x)
    }
}

/// Grid values, linearly interpolated.
impl PointFunction<f64> for GridFunction<f64> {
    fn value_at(&self, x: &f64) -> Result<f64> {
        Ok(self.interpolate(*x))
    }
}

struct LetterData<S> {
    lo: S,
    hi: S,
    /// the range touching the right end of the ambient interval is closed there
    hi_closed: bool,
    forward: Coeffs<S>,
    inverse: Coeffs<S>,
    /// `T = f_i^{-1}` on `R_i`, so the coding map need not be consulted
    inverse_is_coding: bool,
}

impl<S: Scalar> LetterData<S> {
    fn contains(&self, y: &S) -> bool {
        le(&self.lo, y) && (lt(y, &self.hi) || (self.hi_closed && *y == self.hi))
    }
}

/// Per-index data of a representation lifted into backend `S`.
pub struct Evaluator<'a, S: Scalar> {
    rep: &'a Representation,
    letters: BTreeMap<usize, LetterData<S>>,
}

impl<'a, S: RootScalar> Evaluator<'a, S> {
    /// Indices `1..=n`.
    pub fn new(rep: &'a Representation, n: usize) -> Result<Self> {
        Self::for_indices(rep, 1..=n)
    }

    pub fn for_indices(rep: &'a Representation, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let f = &rep.system;
        let top = f.ambient().hi();
        let mut letters = BTreeMap::new();
        for i in indices {
            let r = f.range(i)?;
            let forward = f.branch_coeffs::<S>(i)?;
            let inverse_is_coding = match &rep.coding {
                None => true,
                Some(t) => coding_agrees(t, &f.branch(i)?, &r)?,
            };
            letters.insert(
                i,
                LetterData {
                    lo: S::from_rational(r.lo()),
                    hi: S::from_rational(r.hi()),
                    hi_closed: r.hi() == top,
                    inverse: inverse_coeffs(&forward),
                    forward,
                    inverse_is_coding,
                },
            );
        }
        Ok(Evaluator { rep, letters })
    }

    fn letter(&self, i: usize) -> Result<&LetterData<S>> {
        self.letters.get(&i).ok_or_else(|| Error::IndexOutOfRange {
            index: i,
            arity: format!("evaluator built for {} indices", self.letters.len()),
        })
    }

    /// `χ_{R_i}(x)` with half-open ranges.
    pub fn in_range(&self, i: usize, x: &S) -> Result<bool> {
        Ok(self.letter(i)?.contains(x))
    }

    /// Walks the letters of `w` left to right from `x`, tracking the moved point
    /// and the product of `|derivative|` factors. `None` when a range
    /// indicator vanishes. Then `(w φ)(x) = sqrt(weight) φ(point)`.
    pub fn path(&self, w: &OperatorWord, x: &S) -> Result<Option<(S, S)>> {
        let mut y = x.clone();
        let mut weight = S::unit();
        for letter in w.letters() {
            match *letter {
                Letter::Gen(i) => {
                    let l = self.letter(i)?;
                    if !l.contains(&y) {
                        return Ok(None);
                    }
                    let (z, slope) = match &self.rep.coding {
                        Some(t) if !l.inverse_is_coding => t.eval_with_slope(&y)?,
                        _ => (eval_coeffs(&l.inverse, &y)?, derivative_coeffs(&l.inverse, &y)?),
                    };
                    weight = weight * slope.magnitude();
                    y = z;
                }
                Letter::Adj(i) => {
                    let l = self.letter(i)?;
                    weight = weight * derivative_coeffs(&l.forward, &y)?.magnitude();
                    y = eval_coeffs(&l.forward, &y)?;
                }
            }
        }
        Ok((!weight.is_nil()).then_some((weight, y)))
    }

    /// `(w φ)(x)`.
    pub fn eval_word<F: PointFunction<S> + ?Sized>(&self, w: &OperatorWord, phi: &F, x: &S) -> Result<S::Root> {
        match self.path(w, x)? {
            Some((weight, y)) => Ok(weight.sqrt_abs() * phi.value_at(&y)?.lift()),
            None => Ok(S::root_zero()),
        }
    }

    pub fn eval_expr<F: PointFunction<S>>(&self, e: &OperatorExpr, phi: &F, x: &S) -> Result<S::Root> {
        Ok(self.eval_expr_many(e, std::slice::from_ref(phi), x)?.pop().expect("one function"))
    }

    /// `(e φ)(x)` for several functions, sharing the moved points between them.
    pub fn eval_expr_many<F: PointFunction<S>>(&self, e: &OperatorExpr, phis: &[F], x: &S) -> Result<Vec<S::Root>> {
        let mut acc = vec![S::root_zero(); phis.len()];
        for (c, w) in e.terms() {
            let Some((weight, y)) = self.path(w, x)? else { continue };
            let root = if weight == S::unit() { S::unit().lift() } else { weight.sqrt_abs() };
            let scale = S::from_rational(c).lift() * root;
            for (a, phi) in acc.iter_mut().zip(phis) {
                *a = a.clone() + scale.clone() * phi.value_at(&y)?.lift();
            }
        }
        Ok(acc)
    }
}

/// Whether the coding map restricted to `R_i` is the single piece `f_i^{-1}`.
fn coding_agrees(t: &PiecewiseMap, branch: &Moebius, range: &Interval) -> Result<bool> {
    let Some(id) = t.locate(&range.midpoint())? else { return Ok(false) };
    let p = t.piece(id);
    Ok(p.domain().contains_interval(range) && p.map().projectively_eq(&branch.inverse()))
}

fn apply_letter(rep: &Representation, letter: Letter, phi: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    if phi.ambient() != rep.system.ambient() {
        return Err(Error::GridMismatch(format!(
            "function on {}, system on {}",
            phi.ambient(),
            rep.system.ambient()
        )));
    }
    let ev = Evaluator::<f64>::for_indices(rep, [letter.index()])?;
    let w = OperatorWord::new(vec![letter])?;
    let values = nodes_f64(phi.ambient(), phi.len())
        .iter()
        .map(|x| ev.eval_word(&w, phi, x))
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(phi.ambient().clone(), values)
}

/// `S_i φ` on the grid; `φ` is interpolated at the moved points.
pub fn apply_generator(rep: &Representation, i: usize, phi: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    apply_letter(rep, Letter::Gen(i), phi)
}

/// `S_i* φ` on the grid.
pub fn apply_adjoint(rep: &Representation, i: usize, phi: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    apply_letter(rep, Letter::Adj(i), phi)
}

/// Applies the expression letter by letter, rightmost first, re-interpolating
/// after each letter, and sums the terms.
pub fn apply_word(rep: &Representation, e: &OperatorExpr, phi: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    let mut total = vec![0.0; phi.len()];
    for (c, w) in e.terms() {
        let mut v = phi.clone();
        for letter in w.letters().iter().rev() {
            v = apply_letter(rep, *letter, &v)?;
        }
        let c = f64::from_rational(c);
        total.iter_mut().zip(v.values()).for_each(|(t, x)| *t += c * x);
    }
    GridFunction::new(phi.ambient().clone(), total)
}

/// Closed-form samples `(x, (e φ)(x))` at the midpoints of an `m`-cell grid.
pub fn sample_expr(rep: &Representation, e: &OperatorExpr, phi: &TestFunction, m: usize) -> Result<Vec<(f64, f64)>> {
    let ev = Evaluator::<f64>::new(rep, e.max_index())?;
    nodes_f64(rep.system.ambient(), m)
        .into_iter()
        .map(|x| Ok((x, ev.eval_expr(e, phi, &x)?)))
        .collect()
}
