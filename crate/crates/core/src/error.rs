use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or insufficient input data.
    Data,
    /// The numerics could not produce a meaningful answer.
    Numerical,
    /// The caller asked for something outside an operation's domain.
    Usage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("non-monotone dates: {0}")]
    NonMonotone(String),

    #[error("irregular spacing: {0}")]
    IrregularSpacing(String),

    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("leading gap: the first observation has no value to carry forward")]
    LeadingGap,

    #[error("series contains gaps; fill them first")]
    HasGaps,

    #[error("empty intersection of timestamps")]
    EmptyIntersection,

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DegenerateVariance(_) | Error::NonConvergence(_) | Error::Numerical(_) => {
                ErrorClass::Numerical
            }
            Error::InvalidParameter(_) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }
}
