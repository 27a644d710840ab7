use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("unbalanced panel: individual {id} has no observation at time {time}")]
    UnbalancedPanel { id: String, time: f64 },

    #[error("duplicate observation for individual {id} at time {time}")]
    DuplicateObservation { id: String, time: f64 },

    #[error("invalid outcome {value} for individual {id} at time {time}: outcomes must be finite and >= 0")]
    InvalidOutcome { id: String, time: f64, value: f64 },

    #[error("time {0} is not on the panel grid")]
    UnknownTime(f64),

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight argument {argument} is not a positive integer (j = {j}, n = {n}, Q = {q})")]
    InvalidWeightIndex { argument: i64, j: usize, n: usize, q: usize },

    #[error("weight normaliser B({q}) is zero")]
    DegenerateWeights { q: usize },

    #[error("at time {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("degenerate cross-section at time {0}: no observation at or below the threshold")]
    DegenerateCrossSection(f64),

    #[error("relative change undefined: index at the base time is zero")]
    UndefinedRelativeChange,

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn at_time(self, time: f64) -> Self {
        Error::AtTime {
            time,
            source: Box::new(self),
        }
    }

    /// True when the error stems from user-supplied configuration rather than
    /// from the data or the computation.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidCost(_) | Error::InvalidParameter(_) => true,
            Error::AtTime { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
