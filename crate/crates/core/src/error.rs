use thiserror::Error;

/// Failure to parse one of the text formats (rationals, ground specs,
/// prefix term expressions).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ParseError {
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        ParseError {
            message: message.into(),
        }
    }
}

/// An evaluated value (intermediate or final) left a ground set that is not
/// closed under the operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("value left the ground set")]
pub struct OutOfGround;
