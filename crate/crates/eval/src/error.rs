use clinseek_core::ErrorCode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("gold label list is empty")]
    EmptyGold,
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("groups differ between reports: only in agentic {only_agentic:?}, only in curated {only_curated:?}")]
    GroupMismatch {
        only_agentic: Vec<String>,
        only_curated: Vec<String>,
    },
    #[error("no gold labels for task {0}")]
    MissingGold(String),
}

impl EvalError {
    pub fn code(&self) -> ErrorCode {
        match self {
            EvalError::EmptyGold => ErrorCode::EmptyGold,
            EvalError::EmptyInput => ErrorCode::EmptyInput,
            EvalError::GroupMismatch { .. } => ErrorCode::GroupMismatch,
            EvalError::MissingGold(_) => ErrorCode::MalformedInput,
        }
    }
}
