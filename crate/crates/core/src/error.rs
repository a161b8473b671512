use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("transition ({state}, {action}, {next_state}) is impossible under the prior")]
    ImpossibleTransition {
        state: usize,
        action: usize,
        next_state: usize,
    },

    #[error("degenerate prior: zero pseudo-count mass at ({state}, {action})")]
    DegeneratePrior { state: usize, action: usize },

    #[error("skeleton mismatch at ({state}, {action}): {reason}")]
    SkeletonMismatch {
        state: usize,
        action: usize,
        reason: String,
    },

    #[error("incomplete class listing: ({state}, {action}) has no possible successor")]
    IncompleteListing { state: usize, action: usize },

    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("oracle budget exceeded: about {estimated_nodes} nodes needed, cap is {cap}")]
    BudgetExceeded { estimated_nodes: u128, cap: u128 },

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("row ({state}, {action}) sums to {sum}, expected 1")]
    Stochasticity {
        state: usize,
        action: usize,
        sum: f64,
    },

    #[error("reward {value} at ({state}, {action}, {next_state}) outside [0, 1]")]
    Range {
        state: usize,
        action: usize,
        next_state: usize,
        value: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user input (bad files, flags) rather than
    /// failures during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::InvalidModel(_)
                | Error::Schema { .. }
                | Error::Stochasticity { .. }
                | Error::Range { .. }
                | Error::SkeletonMismatch { .. }
                | Error::IncompleteListing { .. }
                | Error::DegeneratePrior { .. }
        )
    }
}
