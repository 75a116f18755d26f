use clinseek_core::{ErrorCode, ToolFailure};
use serde::{Deserialize, Serialize};

pub const MAX_SEARCH_K: usize = 10;
pub const SNIPPET_CHARS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeDoc {
    pub doc_id: String,
    pub title: String,
    pub url: String,
    pub body: String,
    pub fetched_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub title: String,
    pub snippet: String,
    pub rank: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KnowledgeError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("no document {0:?}")]
    NotFound(String),
    #[error("knowledge backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("{0}")]
    InvalidArguments(String),
}

impl KnowledgeError {
    pub fn code(&self) -> ErrorCode {
        match self {
            KnowledgeError::EmptyQuery => ErrorCode::EmptyQuery,
            KnowledgeError::NotFound(_) => ErrorCode::NotFound,
            KnowledgeError::BackendUnavailable(_) => ErrorCode::BackendUnavailable,
            KnowledgeError::InvalidArguments(_) => ErrorCode::InvalidArguments,
        }
    }
}

impl From<KnowledgeError> for ToolFailure {
    fn from(e: KnowledgeError) -> Self {
        ToolFailure::new(e.code(), e.to_string())
    }
}

/// A source of ranked hits and full documents.
pub trait KnowledgeBackend: Send + Sync {
    /// At most `k` hits ranked from 1. `query` is nonempty and `k` is in
    /// `1..=MAX_SEARCH_K`.
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, KnowledgeError>;

    /// Resolves a doc_id or URL.
    fn fetch(&self, id: &str) -> Result<KnowledgeDoc, KnowledgeError>;
}
