//! Domain types shared by every part of the clinical evidence-seeking
//! environment: task instances, the tool protocol records exchanged with a
//! policy, and the trajectories an episode produces.

pub mod answer;
pub mod error;
pub mod task;
pub mod time;
pub mod tool;
pub mod trajectory;

pub use answer::{dedup_normalized, normalize_answer};
pub use error::ErrorCode;
pub use task::{AnswerKind, AnswerSchema, ImageRef, SchemaError, TaskGroup, TaskInstance};
pub use time::{Timestamp, TimestampError};
pub use tool::{
    names, Arguments, ObservationStatus, Observation, ParamType, ToolCall, ToolFailure, ToolOutput, ToolParam, ToolSchema,
    DEFAULT_MAX_TOOL_RESULT_CHARS,
};
pub use trajectory::{
    read_trajectories, validate_trajectory, validate_trajectory_with, write_trajectories, Step,
    Termination, Trajectory, TrajectoryIoError, ValidationLimits, Violation,
    DEFAULT_MAX_ROUNDS,
};
