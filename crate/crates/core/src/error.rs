use thiserror::Error;

use crate::minimizer::Stall;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite integrand value at quadrature node {node}")]
    NumericOverflow { node: usize },

    #[error("tensor outside the physical set (margin {margin:e})")]
    OutOfDomain { margin: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("bulk minimum at the fringe of the physical set (margin {margin:e})")]
    BoundaryMinimum { margin: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("node {node} is outside the physical set")]
    InvalidState { node: usize },

    #[error("node {node} reached the barrier floor (margin {margin:e})")]
    BarrierBreach { node: usize, margin: f64 },

    #[error("line search stalled at iteration {}", .0.trace.records.len())]
    Stalled(Box<Stall>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
