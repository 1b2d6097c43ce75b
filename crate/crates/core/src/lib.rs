//! Branching function systems on an interval, their jump transformations, the
//! Cuntz algebra isometries they induce, and invariant densities.
//!
//! All geometric data is exact; evaluation is generic over a [`Scalar`]
//! backend (`f64` or arbitrary-precision rationals).

pub mod branching;
pub mod catalog;
pub mod cuntz;
pub mod descriptor;
pub mod error;
pub mod grid;
pub mod interval_dynamics;
pub mod jump;
pub mod measure;
pub mod samples;
pub mod scalar;
pub mod suite;
pub mod surd;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
