use std::time::Duration;

use clinseek_core::{ErrorCode, ToolFailure};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown patient {0:?}: no event table holds rows for it")]
    UnknownPatient(String),
    #[error("malformed manifest {path}: {message}")]
    MalformedManifest { path: String, message: String },
    #[error("malformed table {table}: row {row}, column {column}: {message}")]
    MalformedTable {
        table: String,
        /// 1-based data row; 0 refers to the header.
        row: usize,
        column: String,
        message: String,
    },
    #[error("io failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

impl StoreError {
    pub fn code(&self) -> ErrorCode {
        match self {
            StoreError::UnknownPatient(_) => ErrorCode::UnknownPatient,
            StoreError::MalformedManifest { .. } => ErrorCode::MalformedManifest,
            StoreError::MalformedTable { .. } => ErrorCode::MalformedTable,
            StoreError::Io { .. } => ErrorCode::IoFailure,
            StoreError::InvalidArguments(_) => ErrorCode::InvalidArguments,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<StoreError> for ToolFailure {
    fn from(e: StoreError) -> Self {
        ToolFailure::new(e.code(), e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ToolError {
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("{0} is not an event table")]
    NotEventTable(String),
    #[error("{0} is not a dictionary table")]
    NotDictionaryTable(String),
    #[error("invalid range: start {start} is after end {end}")]
    InvalidRange { start: String, end: String },
    #[error("only a single SELECT statement is allowed: {0}")]
    ForbiddenStatement(String),
    #[error("sql error: {0}")]
    Sql(String),
    #[error("query exceeded the {0:?} time limit")]
    Timeout(Duration),
    #[error("query must be nonempty")]
    EmptyQuery,
    #[error("{0}")]
    InvalidArguments(String),
}

impl ToolError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ToolError::UnknownTable(_) => ErrorCode::UnknownTable,
            ToolError::NotEventTable(_) => ErrorCode::NotEventTable,
            ToolError::NotDictionaryTable(_) => ErrorCode::NotDictionaryTable,
            ToolError::InvalidRange { .. } => ErrorCode::InvalidRange,
            ToolError::ForbiddenStatement(_) => ErrorCode::ForbiddenStatement,
            ToolError::Sql(_) => ErrorCode::SqlError,
            ToolError::Timeout(_) => ErrorCode::Timeout,
            ToolError::EmptyQuery => ErrorCode::EmptyQuery,
            ToolError::InvalidArguments(_) => ErrorCode::InvalidArguments,
        }
    }
}

impl From<ToolError> for ToolFailure {
    fn from(e: ToolError) -> Self {
        ToolFailure::new(e.code(), e.to_string())
    }
}
