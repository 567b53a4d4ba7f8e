use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of the operation (k = 0 where k ≥ 1 is needed, i > k, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A textual spec failed to parse; `pos` is the 0-based byte offset of the offending token.
    #[error("parse error at position {pos}: {msg}\n  {input}\n  {caret}", caret = caret(*pos))]
    Parse {
        input: String,
        pos: usize,
        msg: String,
    },

    /// Refused because the requested work exceeds a configured bound.
    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn caret(pos: usize) -> String {
    format!("{}^", " ".repeat(pos))
}

impl Error {
    pub(crate) fn parse(input: &str, pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            pos,
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
