use thiserror::Error;

pub type Result<T> = std::result::Result<T, RgError>;

/// Failure classes of the solver. Each class maps to its own CLI exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("blow-up: non-finite value at node {node} (x = {x:e}) in step {step} (t = {time})")]
    BlowUp {
        step: usize,
        time: f64,
        node: usize,
        x: f64,
    },

    #[error("degenerate profile: center value {0:e} is not strictly positive")]
    DegenerateProfile(f64),

    #[error("diverging coefficient: {name} = {value:e}")]
    DivergingCoefficient { name: String, value: f64 },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("quadrature did not converge after {panels} panels (last change {delta:e})")]
    NotConverged { panels: usize, delta: f64 },
}

impl RgError {
    /// Short, stable name used in `summary.csv` status columns.
    pub fn class(&self) -> &'static str {
        match self {
            RgError::InvalidArgument(_) => "invalid-argument",
            RgError::DivisionByZero(_) => "division-by-zero",
            RgError::BlowUp { .. } => "blow-up",
            RgError::DegenerateProfile(_) => "degenerate-profile",
            RgError::DivergingCoefficient { .. } => "diverging-coefficient",
            RgError::InvalidPolicy(_) => "invalid-policy",
            RgError::InsufficientData(_) => "insufficient-data",
            RgError::NotConverged { .. } => "not-converged",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RgError::InvalidArgument(_) => 2,
            RgError::DivisionByZero(_) => 3,
            RgError::BlowUp { .. } => 4,
            RgError::DegenerateProfile(_) => 5,
            RgError::DivergingCoefficient { .. } => 6,
            RgError::InvalidPolicy(_) => 7,
            RgError::InsufficientData(_) => 8,
            RgError::NotConverged { .. } => 9,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> RgError {
    RgError::InvalidArgument(msg.into())
}
