use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("power iteration did not converge after {iters} iterations (last estimate {estimate})")]
    PowerIteration { iters: usize, estimate: f64 },

    #[error("conjugate gradients did not converge after {iters} iterations (relative residual {residual:e})")]
    CgNotConverged { iters: usize, residual: f64 },

    #[error("metric is only positive semi-definite; use pseudo_inverse_apply instead")]
    SemiDefiniteMetric,

    #[error("dense path limited to dimension {cap}, got {dim}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("point outside the domain of {kind} at coordinate {index} (value {value})")]
    OutsideDomain {
        kind: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{kind} has no conjugate in the function catalogue")]
    UnsupportedConjugate { kind: &'static str },

    #[error("step size violates {0}")]
    StepSize(String),

    #[error("unsupported problem structure: {0}")]
    Unsupported(String),

    #[error("inner solve did not converge: {0}")]
    InnerSolve(String),

    #[error("no saddle point: {0}")]
    NoSaddle(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported MPS feature '{feature}' at line {line}")]
    MpsUnsupported { feature: String, line: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input or the filesystem rather than
    /// by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::MpsUnsupported { .. }
                | Error::Config(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
