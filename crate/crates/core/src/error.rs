use thiserror::Error;

/// Errors raised by the statistical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample must contain at least one observation")]
    EmptySample,

    #[error("sample contains a non-finite value at index {0}")]
    NonFiniteObservation(usize),

    #[error("series truncation cap of {cap} terms reached (remaining mass {remaining:e})")]
    TruncationCap { cap: usize, remaining: f64 },

    #[error("quadrature did not stabilise: {0}")]
    Quadrature(String),

    #[error("degenerate information matrix: {0}")]
    Degenerate(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("no sign change found while bracketing: {0}")]
    NoBracket(String),

    #[error("root located at the edge of the search bracket: {0}")]
    RootAtBoundary(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("infeasible starting point: {0}")]
    Infeasible(String),

    #[error("constraint Jacobian is rank deficient")]
    RankDeficient,
}

pub type Result<T> = std::result::Result<T, Error>;
