use thiserror::Error;

/// Errors surfaced by parsing, the interface registry and the refinement engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: u32,
        col: u32,
        message: String,
    },

    /// An interface operation was fed values of the wrong kind.
    #[error("interface misuse: {0}")]
    Misuse(String),

    /// The engine's bookkeeping was found in a state it can never reach on
    /// valid inputs.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn parse(line: u32, col: u32, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    pub fn misuse(message: impl Into<String>) -> Self {
        Error::Misuse(message.into())
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Error::Invariant(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
