//! Scoring of finished episodes.
//!
//! Each sample gets a set-overlap F1 in percent ([`score_sample`]); groups
//! and the pooled benchmark get a mean with a two-sided 95% Student-t
//! interval ([`confidence_interval`]).

mod delta;
mod error;
mod report;
mod score;
mod stats;
mod usage;

pub use delta::{delta_report, DeltaReport, DeltaRow, Sign};
pub use error::EvalError;
pub use report::{format_ci, EvalReport, OVERALL};
pub use score::{score_sample, score_trajectories, EvalRecord};
pub use stats::{aggregate, aggregate_by, confidence_interval, mean, sample_sd, t_quantile_975, Aggregate, CIEstimate};
pub use usage::{tool_usage, ToolCount, ToolUsageReport};
