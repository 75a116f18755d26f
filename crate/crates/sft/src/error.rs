use clinseek_core::ErrorCode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SftError {
    #[error("trajectory {0} did not finish")]
    UnfinishedTrajectory(String),
    #[error("message {message_index}: {message}")]
    Malformed { message_index: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown tokenizer {0:?}")]
    UnknownTokenizer(String),
}

impl SftError {
    pub fn code(&self) -> ErrorCode {
        match self {
            SftError::UnfinishedTrajectory(_) => ErrorCode::UnfinishedTrajectory,
            SftError::Malformed { .. } | SftError::UnknownTokenizer(_) => ErrorCode::MalformedInput,
            SftError::Io { .. } => ErrorCode::IoFailure,
        }
    }
}
