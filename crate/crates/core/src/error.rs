use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty particle cloud")]
    EmptyCloud,

    #[error("invalid cloud: {0}")]
    InvalidCloud(String),

    #[error("weights sum to {sum}, expected 1 within {tolerance:e}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("operation requires dimension {expected}, cloud has dimension {actual}")]
    WrongDimension { expected: usize, actual: usize },

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("transport solver did not converge after {iterations} pivots")]
    SolverStalled { iterations: usize },

    #[error("mass splitting at sources {sources:?} cannot be resolved")]
    MassSplitting { sources: Vec<usize> },

    #[error("optimal matching is degenerate at time step {step} (cost gap {gap:e})")]
    DegenerateMatching { step: usize, gap: f64 },

    #[error("index {index} out of range 0..={last}")]
    IndexOutOfRange { index: usize, last: usize },

    #[error("invalid demand schedule: {0}")]
    InvalidSchedule(String),

    #[error("grid mismatch: signal has {signal} samples, grid has {grid} nodes")]
    GridMismatch { signal: usize, grid: usize },
}

impl Error {
    /// Whether the error reports a numerical failure rather than invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverStalled { .. } | Error::MassSplitting { .. } | Error::DegenerateMatching { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}
