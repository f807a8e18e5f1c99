use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of a text resource could not be ingested.
    #[error("{reason} at line {line}")]
    Load { line: usize, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    /// Well-formed input whose content is inconsistent (dangling references, out-of-range values).
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn load(line: usize, reason: impl Into<String>) -> Self {
        Error::Load {
            line,
            reason: reason.into(),
        }
    }
}
