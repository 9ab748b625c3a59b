use thiserror::Error;

/// Errors produced by the shooting library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {s} outside the domain [{lo}, {hi}] of the nonlinearity")]
    Domain { s: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("hypothesis {condition} fails: {detail}")]
    Hypothesis { condition: String, detail: String },

    #[error("right-hand side is singular at r = 0; start from the series expansion")]
    Singularity,

    #[error("degenerate start: f({alpha}) = 0, the constant solution u = {alpha} is an equilibrium")]
    DegenerateStart { alpha: f64 },

    #[error("inconsistent event trace: {0}")]
    Consistency(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no bracket found: {0}")]
    NotFound(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
