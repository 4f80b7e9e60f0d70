use thiserror::Error;

/// Errors raised by the emission simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {len} atoms")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),

    #[error("eigensolver failed: {message} (condition estimate {condition:e})")]
    Eigensolver { message: String, condition: f64 },

    #[error("eigenvector basis condition number {condition:e} exceeds {limit:e}; use the ODE propagator")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("step size underflow at t = {t}: h = {h:e}; the system may be stiff")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("time {t} outside covered range [{start}, {end}]")]
    OutOfCoverage { t: f64, start: f64, end: f64 },

    #[error("infeasible target: envelope would need f = {required:.6} > 1 at t = {t}")]
    InfeasibleTarget { t: f64, required: f64 },

    #[error("reference photon curve is not monotone near t = {t}")]
    NonMonotoneReference { t: f64 },

    #[error("malformed input ({context}): {message}")]
    Parse { context: String, message: String },

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
