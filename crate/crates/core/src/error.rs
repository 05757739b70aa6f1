use std::io;

use thiserror::Error;

/// Errors produced by the bounds engine, the combinatorial oracles and the
/// verification harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the quantity is defined.
    #[error("{name}: {reason}")]
    Domain { name: &'static str, reason: String },

    /// A brute-force enumeration would exceed its configured budget.
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    /// A tail integral does not converge for the requested moment order.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// A deviation ratio has a zero denominator (tau = 0 with zero risk).
    #[error("zero denominator in deviation ratio for hypothesis {hypothesis}")]
    DenominatorZero { hypothesis: usize },

    /// A configuration or table file failed field-level validation.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in structured CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Budget(_) => "budget",
            Error::Divergent(_) => "divergent",
            Error::DenominatorZero { .. } => "denominator_zero",
            Error::Validation { .. } => "validation",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
