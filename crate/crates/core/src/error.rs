use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: lower end must be below upper end")]
    InvalidInterval { lo: String, hi: String },

    #[error("singular Moebius coefficients (ad - bc = 0)")]
    SingularMoebius,

    #[error("Moebius map has a pole at {0}")]
    Pole(String),

    #[error("point {0} lies outside the ambient interval")]
    OutOfDomain(String),

    #[error("point {0} lies in no piece and is not an exceptional point")]
    NoPiece(String),

    #[error("map is not differentiable at {0}")]
    NonDifferentiable(String),

    #[error("value {0} is outside the range of the branch")]
    OutOfRange(String),

    #[error("invalid branching function system: {0}")]
    InvalidSystem(String),

    #[error("branch index {index} out of range (arity {arity})")]
    IndexOutOfRange { index: usize, arity: String },

    #[error("expected a system of arity {expected}, found {found}")]
    ArityMismatch { expected: String, found: String },

    #[error("no entry into the target set within {cap} iterations from {x}")]
    EntryCapExceeded { x: String, cap: u64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no tail bound derivable: {0}")]
    TailUnbounded(String),

    #[error("integral failed: {0}")]
    QuadratureFailure(String),

    #[error("power iteration did not converge after {iterations} steps (last change {change:e})")]
    NonConvergence { iterations: usize, change: f64 },

    #[error("orbit escaped after {step} steps: {reason}")]
    OrbitEscape { step: u64, reason: String },

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot parse `{0}` as a rational number")]
    ParseRational(String),

    #[error("malformed descriptor: {0}")]
    Descriptor(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
