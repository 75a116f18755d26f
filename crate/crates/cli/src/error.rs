use std::fmt;

use clinseek_core::ErrorCode;

/// Exit code for domain failures.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit code for bad flags, values or configuration.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Domain { code: String, message: String },
}

impl CliError {
    pub fn domain(code: impl fmt::Display, message: impl fmt::Display) -> Self {
        CliError::Domain {
            code: code.to_string(),
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        CliError::Usage(message.to_string())
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::domain(ErrorCode::IoFailure, format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain { .. } => EXIT_DOMAIN,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain { code, message } => write!(f, "error[{code}]: {message}"),
        }
    }
}

macro_rules! from_coded {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::domain(e.code(), &e)
            }
        }
    )*};
}

from_coded!(
    clinseek_bench::BenchError,
    clinseek_eval::EvalError,
    clinseek_sft::SftError,
    clinseek_ehr::StoreError,
    clinseek_knowledge::KnowledgeError
);

impl From<clinseek_imaging::ImagingError> for CliError {
    fn from(e: clinseek_imaging::ImagingError) -> Self {
        CliError::domain(e.code, e.message)
    }
}

impl From<clinseek_core::TrajectoryIoError> for CliError {
    fn from(e: clinseek_core::TrajectoryIoError) -> Self {
        let code = match e {
            clinseek_core::TrajectoryIoError::Io { .. } => ErrorCode::IoFailure,
            clinseek_core::TrajectoryIoError::Parse { .. } => ErrorCode::MalformedInput,
        };
        CliError::domain(code, e)
    }
}
