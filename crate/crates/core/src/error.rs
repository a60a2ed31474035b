use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed or out-of-contract input (bad JSON, non-canonical point, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A window or search would exceed the configured point cap.
    #[error("point cap of {cap} exceeded while {context}")]
    Resource { cap: usize, context: String },

    /// The region asked for is empty, e.g. a horizon not beyond the forbidden ball.
    #[error("empty domain: {0}")]
    EmptyDomain(String),

    /// The finite horizon is too small to decide the question.
    #[error("inconclusive at this scale: {0}")]
    Inconclusive(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn resource(cap: usize, context: impl Into<String>) -> Self {
        Error::Resource {
            cap,
            context: context.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(format!("json: {e}"))
    }
}
