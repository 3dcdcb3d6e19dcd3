use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was not met (length mismatch,
    /// out-of-bounds input, empty subpopulation, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("objective evaluation produced NaN at generation {generation} for genes {genes:?}")]
    NanObjective { generation: u64, genes: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("connection error: {0}")]
    Connection(#[from] std::io::Error),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("encode error: {0}")]
    Encode(String),

    #[error("timed out: {0}")]
    Timeout(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
