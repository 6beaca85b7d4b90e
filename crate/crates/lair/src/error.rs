//! Error type shared across the crate.
//!
//! Contract violations (dimension mismatches, bad thresholds) panic with a
//! message; data-dependent failures (singular blocks, unreadable files,
//! breakdown) are reported through [`Error`].

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A matrix or diagonal block that must be invertible is singular.
    Singular(String),
    /// A problem description or solver configuration is not usable.
    InvalidInput(String),
    /// The iteration produced a non-finite residual.
    NumericalBreakdown(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
    /// Matrix Market parse failure with 1-based line number.
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Singular(msg) => write!(f, "singular matrix: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NumericalBreakdown(msg) => write!(f, "numerical breakdown: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
