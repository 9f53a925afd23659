use thiserror::Error;

/// Errors raised by the lattice, operator, solver and CLI layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {what} needs {requested} entries, budget is {budget}")]
    Capacity {
        what: &'static str,
        requested: u128,
        budget: u128,
    },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// The restricted tangent operator is (numerically) singular. Carries the
    /// mode with the smallest diagonal divisor so the caller can see which
    /// combination `<k, omega'>` went resonant.
    #[error("near resonance: {reason} (smallest divisor {divisor:e} at mode j={j}, k={k:?})")]
    NearResonance {
        reason: String,
        j: usize,
        k: Vec<i32>,
        divisor: f64,
    },

    #[error("structural condition violated: {0}")]
    ConditionViolation(String),

    #[error("invalid value for `{key}`: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("step-size certification failed: {0}")]
    StepSize(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
