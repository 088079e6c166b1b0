//! Crate-wide error type.

use std::path::Path;

use thiserror::Error;

/// Errors reported by the library.
///
/// The split matters for the command-line front end: [`Error::Data`] and
/// [`Error::Invalid`] map to the "bad input" exit code, everything else is
/// treated as an internal failure.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input (unparseable cells, duplicate identifiers, ragged
    /// rows, …). Messages carry the offending location where available.
    #[error("{0}")]
    Data(String),

    /// A precondition of an operation does not hold — degenerate classes,
    /// empty index sets, out-of-range parameters and the like.
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// An [`Error::Io`] whose message names the file involved. Callers see
    /// "which file" without losing the [`std::io::ErrorKind`].
    pub fn io_at(path: &Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    }
}
