use thiserror::Error;

/// Failures reported by the solvers and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no convergence: {msg} (final bracket [{lo:e}, {hi:e}])")]
    Convergence { msg: String, lo: f64, hi: f64 },
    #[error("degenerate derivative: {0}")]
    Degeneracy(String),
    #[error("classification failed: {0}")]
    Classification(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("structure violated: {0}")]
    Structure(String),
    #[error("chart left at u = {last_u:e}: {msg}")]
    Chart { msg: String, last_u: f64 },
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
