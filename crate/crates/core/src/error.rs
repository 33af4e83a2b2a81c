use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the domain an operation accepts.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("persistence error: {0}")]
    Persistence(String),

    /// The scoring backend could not be reached (timeout, refused connection, 5xx after retries).
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    /// The backend answered, but the answer violates the wire protocol.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A computation had nothing to work on, e.g. an empty residual band.
    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by infrastructure rather than by the caller's input.
    pub fn is_infrastructure(&self) -> bool {
        matches!(
            self,
            Error::BackendUnavailable(_) | Error::Protocol(_) | Error::Io(_)
        )
    }
}
