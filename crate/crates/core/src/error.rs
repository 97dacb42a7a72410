use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cannot normalize a field with zero norm")]
    ZeroField,

    #[error("eigensolver did not converge after {iterations} block steps; worst residual {worst_residual:.3e} (tol {tol:.1e})")]
    NotConverged {
        iterations: usize,
        tol: f64,
        worst_residual: f64,
        best_residuals: Vec<f64>,
    },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("input energies are not sorted ascending (index {0})")]
    Unsorted(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("missing clean-system baseline for scar scoring")]
    MissingBaseline,

    #[error("config error: {0}")]
    Config(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
