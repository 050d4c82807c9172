//! Error taxonomy shared by every module.

use thiserror::Error;

/// Failure classes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or direction-tuple dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical invariant that must hold for valid inputs was violated.
    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    /// A reconstruction problem does not determine the state.
    #[error("ill-posed reconstruction: {0}")]
    IllPosed(String),

    /// An empirical provider was queried where no data was recorded.
    #[error("missing data: {0}")]
    MissingData(String),

    /// Serialized input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
