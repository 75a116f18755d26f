use clinseek_core::{ErrorCode, ToolFailure};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ImagingError {
    pub code: ErrorCode,
    pub message: String,
}

impl ImagingError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn unreadable(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::UnreadableImage, message)
    }

    pub fn unavailable(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BackendUnavailable, message)
    }
}

impl From<ImagingError> for ToolFailure {
    fn from(e: ImagingError) -> Self {
        ToolFailure::new(e.code, e.message)
    }
}
