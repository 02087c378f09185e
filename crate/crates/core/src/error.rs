use std::fmt;

use thiserror::Error;

/// A single configuration invariant violation, addressed by its dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamErrorKind {
    UnexpectedEnd,
    BadMagic,
    VersionMismatch,
    NonMonotonic,
    Malformed,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join_violations(.0))]
    Config(Vec<Violation>),

    #[error("cannot parse configuration: {0}")]
    ConfigParse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unheraldable configuration: herald click probability is zero")]
    Unheraldable,

    #[error("{message}")]
    Stream { kind: StreamErrorKind, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("efficiency inconsistent with data: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn stream(kind: StreamErrorKind, message: impl Into<String>) -> Self {
        Error::Stream { kind, message: message.into() }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::ConfigParse(_))
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
