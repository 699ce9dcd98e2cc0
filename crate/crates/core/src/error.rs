use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("resource budget exceeded: {what} (budget {budget})")]
    Resource { what: String, budget: u64 },

    #[error("missing variable: {0}")]
    MissingVar(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("circuit output not in {{0,1}} at input {0}")]
    NonBooleanOutput(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn resource(what: impl Into<String>, budget: u64) -> Self {
        Error::Resource { what: what.into(), budget }
    }

    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }

    /// Exit code contract used by the CLI: resource errors map to 2.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}
