use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] brolin_core::Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
    #[error("requested verdicts failed: {0}")]
    Verdicts(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, e: std::io::Error) -> Self {
        LabError::Io { path: path.into(), message: e.to_string() }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        LabError::Parse { path: path.into(), message: message.into() }
    }

    /// 0 success, 1 invalid input or hypothesis violation, 2 numeric budget
    /// exhausted, 3 internal solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(e) => e.exit_code(),
            _ => 1,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
