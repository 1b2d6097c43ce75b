//! Densities, transfer operators and independent invariant-density oracles.

mod birkhoff;
mod density;
mod transfer;
mod ulam;

pub use birkhoff::{birkhoff_histogram, Histogram, OrbitConfig, ORBIT_DENOMINATOR};
pub use density::{Density, Normalization};
pub use transfer::{
    induced_measure, invariance_residual, pullback_check, transfer_apply, transport_density, truncation_for_bound,
    InvarianceReport, PullbackReport, TransferValue,
};
pub use ulam::{l1_to_cells, ulam_density, UlamConfig, UlamResult};
