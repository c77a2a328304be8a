use alloc::string::String;

use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two structures or maps that must live over the same carrier do not.
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    /// Operands of different fiber kinds were combined.
    #[error("kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
    /// A value violates the invariants of its type.
    #[error("invalid structure: {0}")]
    Invalid(String),
    /// A modality, observation domain or fiber kind does not fit the system.
    #[error("incompatible: {0}")]
    Incompatible(String),
    /// The operation is not available for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Malformed textual input.
    #[error("parse error: {0}")]
    Parse(String),
    /// A game move is not a legal move at the current position.
    #[error("illegal move: {0}")]
    IllegalMove(String),
    /// The requested position is not winning for the player that needs it.
    #[error("not winning: {0}")]
    NotWinning(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::Error::Invalid(alloc::format!($($arg)*)) };
}
pub(crate) use invalid;
