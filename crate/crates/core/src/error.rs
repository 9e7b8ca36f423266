use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The operation needs state the input does not have (e.g. no giant cluster).
    #[error("invalid state: {0}")]
    State(String),

    /// A backbone or routing structure could not be built for this sample.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Numeric input data is unusable (e.g. non-positive values for a log fit).
    #[error("data error: {0}")]
    Data(String),

    /// A configuration key failed validation.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    pub(crate) fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
