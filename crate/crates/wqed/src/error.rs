use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WqedError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("density matrix rejected: {0}")]
    InvalidDensityMatrix(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("momentum grid captures only {captured:.9} of the norm (need >= {required:.9})")]
    Coverage { captured: f64, required: f64 },

    #[error("not converged: {0}")]
    Convergence(String),

    #[error("mode spacing {spacing:.3e} too coarse (need <= {required:.3e})")]
    Resolution { spacing: f64, required: f64 },

    #[error("integrator step failure: {0}")]
    StepFailure(String),

    #[error("unsupported initial state: {0}")]
    Unsupported(String),
}

impl WqedError {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        WqedError::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, WqedError>;
