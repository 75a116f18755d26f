use std::path::Path;

use clinseek_core::{ErrorCode, TaskGroup};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("example {task_id}: no context events, cannot derive a cutoff")]
    EmptyContext { task_id: String },
    #[error("{source_name}:{line}: {message}")]
    MalformedInput {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("subtask {subtask}: quota {quota} exceeds {available} available examples")]
    QuotaExceedsAvailable {
        subtask: String,
        quota: usize,
        available: usize,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("no fixture patient has events usable for group {0}")]
    NoUsablePatients(TaskGroup),
}

impl BenchError {
    pub fn code(&self) -> ErrorCode {
        match self {
            BenchError::EmptyContext { .. } => ErrorCode::EmptyContext,
            BenchError::MalformedInput { .. } | BenchError::NoUsablePatients(_) => ErrorCode::MalformedInput,
            BenchError::QuotaExceedsAvailable { .. } => ErrorCode::QuotaExceedsAvailable,
            BenchError::Io { .. } => ErrorCode::IoFailure,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub(crate) fn malformed(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        BenchError::MalformedInput {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
