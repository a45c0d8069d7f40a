//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Blaschke zero: {0}")]
    InvalidZero(String),

    #[error("invalid inner function: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Both kernel arguments are the same real point; the value there is
    /// `kernel_norm_sq`.
    #[error("reproducing kernel requested on the real diagonal at x = {0}; use kernel_norm_sq")]
    DegenerateDiagonal(f64),

    #[error("no real point has phase {target} (phase range is bounded when c = 0)")]
    NoNode { target: f64 },

    #[error("operation requires an exponential factor c > 0")]
    RequiresExponentialFactor,

    #[error("need at least two nodes, got {0}")]
    TooFewNodes(usize),

    #[error("sampling grid does not belong to this inner function (node n = {index}, phase residual {residual:e})")]
    GridMismatch { index: i64, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("function has zero L^p norm")]
    ZeroNorm,

    #[error("L^{p} norm did not converge: tail needs truncation radius {radius:e} (limit 1e6)")]
    NonConvergence { p: f64, radius: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
