use thiserror::Error;

use crate::optimizers::Trace;

pub type Result<T, E = ZoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ZoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An adversarial perturbation exceeded its declared bound.
    #[error("adversarial bound violated at {point:?}: |delta| = {value} > {bound}")]
    ContractViolation {
        point: Vec<f64>,
        value: f64,
        bound: f64,
    },

    /// Iterates became non-finite or left the 1e12 ball. The trace recorded up
    /// to the failure is kept for reporting.
    #[error("method diverged at iteration {iteration}")]
    Diverged { iteration: u64, trace: Box<Trace> },

    #[error("invalid setup: {0}")]
    InvalidSetup(String),
}

impl ZoError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ZoError::InvalidArgument(msg.into())
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, ZoError::Diverged { .. })
    }
}
