use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("unknown parameter '{name}'; valid names: {valid}")]
    UnknownParameter { name: String, valid: String },

    #[error("unbounded region: {0}")]
    UnboundedRegion(String),

    #[error("no convergence after {iterations} iterations (last iterate F = {f}, N = {n}, residual = {residual:e})")]
    NoConvergence {
        iterations: usize,
        f: f64,
        n: f64,
        residual: f64,
    },

    #[error("negative component in converged root: {0}")]
    NegativeComponent(String),

    #[error("nonfinite state at step {step}")]
    NonfiniteState { step: usize },

    #[error("nonfinite state/adjoint at iteration {iteration}")]
    NonfiniteSweep { iteration: usize },

    #[error("degenerate column {0}: zero rank variance")]
    DegenerateColumn(usize),

    #[error("too many failed samples: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-monotone years at line {line}")]
    NonMonotoneYears { line: usize },

    #[error("non-positive value in column '{column}' at line {line}")]
    NonPositiveValue { column: String, line: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NegativeComponent(_)
                | Error::NonfiniteState { .. }
                | Error::NonfiniteSweep { .. }
                | Error::DegenerateColumn(_)
                | Error::TooManyFailures { .. }
                | Error::UnboundedRegion(_)
        )
    }
}
