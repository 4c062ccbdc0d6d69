//! Crate-wide error type with machine-readable categories.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A gradient step produced a non-finite value. Carries the step index
    /// and the norm of the iterate at which the bad gradient was observed.
    #[error("chain diverged at step {step} (iterate norm {norm})")]
    ChainDiverged { step: usize, norm: f64 },

    /// A caller broke a documented precondition (loss bound, learning-rate
    /// range, ...). Distinct from `InvalidArgument` so batteries can assert
    /// on it specifically.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("ingestion failed: {0}")]
    Ingestion(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable category token, used by the CLI for exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ChainDiverged { .. } => "chain_diverged",
            Error::ContractViolation(_) => "contract_violation",
            Error::Solver(_) => "solver_failure",
            Error::Ingestion(_) => "ingestion",
            Error::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::ChainDiverged { .. } => 3,
            Error::ContractViolation(_) => 4,
            Error::Solver(_) => 5,
            Error::Ingestion(_) => 6,
            Error::Io { .. } => 7,
        }
    }
}
