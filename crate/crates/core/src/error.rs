use thiserror::Error;

use crate::chain::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(ValidationReport),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Conditioning on an event of probability zero.
    #[error("null-event conditioning: {0}")]
    NullEvent(String),

    #[error("no unique dominant class: classes {classes:?} tie at rho = {rho}")]
    HypothesisViolated { classes: Vec<Vec<String>>, rho: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e}): {what}")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("state {0} is not in the class")]
    NotInClass(String),

    #[error("class is not irreducible under the given matrix")]
    NotIrreducible,

    #[error("internal numerical error: {0}")]
    Numerical(String),

    #[error("malformed input at {location}: {message}")]
    Malformed { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that mean the analysis does not apply to this input, as
    /// opposed to malformed input.
    pub fn is_inapplicable(&self) -> bool {
        matches!(self, Error::HypothesisViolated { .. } | Error::NullEvent(_))
    }
}
