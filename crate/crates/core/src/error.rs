use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An index, arity or shape does not fit the game it is used with.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("temperature must be positive, got {0}")]
    Temperature(f64),

    #[error("enumeration of {required} evaluations exceeds the cap of {cap}")]
    EnumerationCap { required: u128, cap: u128 },

    #[error("non-finite parameters in {table} at iteration {iteration}")]
    NonFinite { table: String, iteration: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("plot: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
