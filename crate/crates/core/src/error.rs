use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition was not met (missing labels, length mismatch, ...).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The configuration is valid but not supported by this implementation.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A node-doubling convergence check failed; carries both estimates.
    #[error("{what} did not converge: coarse={coarse:e}, fine={fine:e}, change={change:e} > tol={tol:e}")]
    NonConvergence {
        what: String,
        coarse: f64,
        fine: f64,
        change: f64,
        tol: f64,
    },

    #[error("{what}: matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { what: String, eigenvalue: f64 },

    #[error("matrix is asymmetric by {asymmetry:e} before symmetrisation")]
    Asymmetric { asymmetry: f64 },

    #[error("posterior mass {mass:e} within {cells} cells of the grid boundary exceeds {threshold:e}")]
    BoundaryLeak { mass: f64, cells: usize, threshold: f64 },

    #[error("enumeration over 2^{size} assignments exceeds the limit 2^{limit}; use the Monte-Carlo estimator")]
    EnumerationTooLarge { size: usize, limit: usize },

    #[error("chain acceptance rate {acceptance_rate:.3} is outside the usable band")]
    PoorMixing { acceptance_rate: f64 },

    /// Too many replications were excluded for the estimate to stand.
    #[error("{excluded} of {total} replications excluded (limit {limit:.0}%)")]
    TooManyExclusions { excluded: usize, total: usize, limit: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error records and FFI status codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::Unsupported(_) => "unsupported",
            Error::NonConvergence { .. } => "non_convergence",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::Asymmetric { .. } => "asymmetric",
            Error::BoundaryLeak { .. } => "boundary_leak",
            Error::EnumerationTooLarge { .. } => "enumeration_too_large",
            Error::PoorMixing { .. } => "poor_mixing",
            Error::TooManyExclusions { .. } => "too_many_exclusions",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
