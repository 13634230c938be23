use thiserror::Error;

/// Errors raised by the design engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeritError {
    #[error("correlation must lie strictly inside (-1, 1), got {0}")]
    Correlation(f64),

    #[error("{name} must lie strictly inside (0, 1), got {value}")]
    DegenerateMarginal { name: &'static str, value: f64 },

    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("expected a {expected} hypothesis, got {got}")]
    Label { expected: &'static str, got: String },

    #[error("trial state error: {0}")]
    State(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),
}

impl MeritError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        MeritError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MeritError>;
