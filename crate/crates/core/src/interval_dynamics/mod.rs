//! Intervals, Moebius maps and piecewise Moebius maps of an interval.

mod family;
mod interval;
mod moebius;
mod piecewise;

pub use family::{BranchRule, LiftedRule};
pub use interval::Interval;
pub(crate) use moebius::{derivative_coeffs, eval_coeffs, inverse_coeffs};
pub use moebius::{Coeffs, Moebius, MoebiusBranch};
pub use piecewise::{
    piece, validate_piecewise, CompiledMap, Gap, Overlap, PieceFamily, PieceId, PiecewiseMap, PiecewiseReport,
    PoleViolation,
};
