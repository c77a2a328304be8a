use codensity_core::Error as CoreError;
use thiserror::Error;

use crate::format::FormatError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Incompatible(String),
    #[error("{0}")]
    NotWinning(String),
    #[error("{0}")]
    IllegalMove(String),
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(CoreError),
}

impl AppError {
    /// Process exit status for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Parse(_) => 2,
            AppError::Incompatible(_) => 3,
            AppError::NotWinning(_) => 4,
            _ => 1,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse(m) => AppError::Parse(m),
            CoreError::Incompatible(m) => AppError::Incompatible(m),
            CoreError::NotWinning(m) => AppError::NotWinning(m),
            CoreError::IllegalMove(m) => AppError::IllegalMove(m),
            other => AppError::Core(other),
        }
    }
}

impl From<FormatError> for AppError {
    fn from(e: FormatError) -> Self {
        AppError::Parse(e.to_string())
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
