use std::fmt;

use serde::{Deserialize, Serialize};

/// Machine-readable error codes carried by error observations, CLI output
/// and the imaging wire protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    // protocol
    UnknownTool,
    InvalidArguments,
    MalformedCall,
    SnapshotNotLoaded,
    // ehr store
    UnknownPatient,
    MalformedManifest,
    MalformedTable,
    // ehr tools
    UnknownTable,
    NotEventTable,
    NotDictionaryTable,
    InvalidRange,
    ForbiddenStatement,
    SqlError,
    Timeout,
    EmptyQuery,
    // knowledge / imaging backends
    BackendUnavailable,
    NotFound,
    UnreadableImage,
    UnknownStructure,
    RequestTooLarge,
    // bench / eval / export
    EmptyContext,
    MalformedInput,
    QuotaExceedsAvailable,
    EmptyGold,
    EmptyInput,
    GroupMismatch,
    UnfinishedTrajectory,
    IoFailure,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCode::UnknownTool => "unknown_tool",
            ErrorCode::InvalidArguments => "invalid_arguments",
            ErrorCode::MalformedCall => "malformed_call",
            ErrorCode::SnapshotNotLoaded => "snapshot_not_loaded",
            ErrorCode::UnknownPatient => "unknown_patient",
            ErrorCode::MalformedManifest => "malformed_manifest",
            ErrorCode::MalformedTable => "malformed_table",
            ErrorCode::UnknownTable => "unknown_table",
            ErrorCode::NotEventTable => "not_event_table",
            ErrorCode::NotDictionaryTable => "not_dictionary_table",
            ErrorCode::InvalidRange => "invalid_range",
            ErrorCode::ForbiddenStatement => "forbidden_statement",
            ErrorCode::SqlError => "sql_error",
            ErrorCode::Timeout => "timeout",
            ErrorCode::EmptyQuery => "empty_query",
            ErrorCode::BackendUnavailable => "backend_unavailable",
            ErrorCode::NotFound => "not_found",
            ErrorCode::UnreadableImage => "unreadable_image",
            ErrorCode::UnknownStructure => "unknown_structure",
            ErrorCode::RequestTooLarge => "request_too_large",
            ErrorCode::EmptyContext => "empty_context",
            ErrorCode::MalformedInput => "malformed_input",
            ErrorCode::QuotaExceedsAvailable => "quota_exceeds_available",
            ErrorCode::EmptyGold => "empty_gold",
            ErrorCode::EmptyInput => "empty_input",
            ErrorCode::GroupMismatch => "group_mismatch",
            ErrorCode::UnfinishedTrajectory => "unfinished_trajectory",
            ErrorCode::IoFailure => "io_failure",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
