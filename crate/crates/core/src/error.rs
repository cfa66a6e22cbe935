use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation. `field` names the offending input.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error(
        "unstable queue: arrival rate {arrival_rate} must be below service rate {service_rate}"
    )]
    Unstable {
        arrival_rate: f64,
        service_rate: f64,
    },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("waiting-time conventions differ ({0:?} vs {1:?})")]
    ConventionMismatch(
        crate::queue_sim::WaitingConvention,
        crate::queue_sim::WaitingConvention,
    ),

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("degenerate objective: spread {spread:e} over the pre-scan grid")]
    DegenerateObjective { spread: f64 },

    #[error("optimizer exhausted {max_evals} evaluations with bracket width {width:e}")]
    NotConverged { max_evals: usize, width: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Unstable { .. }
                | Error::LengthMismatch { .. }
                | Error::Unsupported(_)
                | Error::ConventionMismatch(..)
                | Error::Json(_)
        )
    }
}
