use thiserror::Error;

/// Errors raised by the numerical pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {x} lies outside the domain {domain}")]
    Domain { x: f64, domain: &'static str },

    #[error(
        "{what} failed to converge after {iterations} iterations (last residual {residual:e})"
    )]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The point needs a return time beyond the tabulated markers.
    #[error("tail overflow: x = {x} needs more than {n_max} return-time markers")]
    TailOverflow { x: f64, n_max: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("grid too small: need at least {needed} points, got {got}")]
    GridTooSmall { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
