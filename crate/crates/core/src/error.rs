use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (apex evaluation,
    /// non-finite arguments, overlapping sets, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Homogeneity or structure preconditions failed on sampled probes.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("iteration diverged after {} iterations", report.iterations)]
    Divergence { report: Box<SolveReport> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
