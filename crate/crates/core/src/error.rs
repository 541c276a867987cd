use std::path::PathBuf;

use thiserror::Error;

use crate::remesh::FupReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("non-triangular face ({0} corners)")]
    NonTriangularFace(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("flat union property still violated after {rounds} repair rounds ({} defects left)", report.len())]
    RepairNotConverged { rounds: usize, report: Box<FupReport> },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
}

/// Coarse failure class, used for CLI exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Io,
    Topology,
    NonConvergence,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } | Error::Parse(_) | Error::NonTriangularFace(_) => ErrorCategory::Io,
            Error::Topology(_) => ErrorCategory::Topology,
            Error::RepairNotConverged { .. } | Error::Numerical(_) => ErrorCategory::NonConvergence,
            Error::InvalidInput(_) | Error::Dimension(_) | Error::Config(_) => ErrorCategory::Usage,
        }
    }
}
