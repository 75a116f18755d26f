//! The evidence-seeking loop: a policy picks tool calls, the runtime runs
//! them against a per-episode [`Registry`], enforces the round and output
//! budgets, and records a [`clinseek_core::Trajectory`].

pub mod batch;
pub mod budget;
pub mod llm;
pub mod policy;
pub mod prompt;
pub mod registry;
pub mod runtime;
pub mod scripted;

pub use batch::{run_batch, BatchResult, EpisodeSpec, ProgressEvent};
pub use budget::{RuntimeBudget, DEFAULT_CONCURRENCY, DEFAULT_MAX_OUTPUT_TOKENS};
pub use llm::{decode_response, unwire_name, wire_name, LlmConfig, LlmPolicy};
pub use policy::{Policy, PolicyContext, PolicyError, PolicyTurn};
pub use prompt::{system_prompt, task_message, SYSTEM_PROMPT_VERSION};
pub use registry::{tool_schemas_for, Registry, ToolHandler, Toolkit};
pub use runtime::{run_episode, run_episode_with, MALFORMED_TOOL};
pub use scripted::{ScriptAction, ScriptedPolicy, IMAGE_ID_PLACEHOLDER};
