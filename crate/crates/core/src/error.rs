use thiserror::Error;

use crate::estimator::Solution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Dykstra iterations exhausted before the intersection projection settled.
    #[error("projection did not converge after {iterations} iterations (residual {residual:.3e})")]
    ProjectionNonConvergence {
        last: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    /// Soft failure: the best iterate is still usable by callers that accept it.
    #[error("solver did not converge after {} iterations (residual {:.3e})", best.iterations, best.residual)]
    SolverNonConvergence { best: Box<Solution> },

    #[error("could not bracket the maximizer of G: still increasing at t = {cap}")]
    Bracket { cap: f64 },

    #[error("{failures} of {total} solves failed, above the 1% limit")]
    TooManyFailures { failures: usize, total: usize },

    #[error("quadrature did not reach tolerance {tol:.1e} (estimate {estimate}, error {error:.3e})")]
    Quadrature { estimate: f64, error: f64, tol: f64 },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
