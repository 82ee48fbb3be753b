use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("non-positive-definite system")]
    NotPositiveDefinite,

    #[error("Newton-Raphson did not converge at load step {step} after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("Galerkin system singular")]
    GalerkinSingular,

    #[error("calibration infeasible: every grid point failed to solve")]
    CalibrationInfeasible,

    #[error("insufficient samples: {got} (need at least {need})")]
    InsufficientSamples { got: usize, need: usize },

    #[error("degenerate column `{0}`: min equals max")]
    DegenerateColumn(&'static str),

    #[error("no viable model: {0}")]
    NoViableModel(String),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// Wraps the error with a human-readable location, e.g. `load 40, draw 17`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
