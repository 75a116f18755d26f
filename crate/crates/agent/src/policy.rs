use clinseek_core::{Arguments, Step, TaskInstance, ToolSchema};

use crate::budget::RuntimeBudget;

/// What a policy wants to do next.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyTurn {
    Call {
        name: String,
        arguments: Arguments,
        reasoning: Option<String>,
    },
    Finish {
        answers: Vec<String>,
        reasoning: Option<String>,
    },
    /// Output that could not be decoded into a tool call. The runtime feeds
    /// `reason` back as an error observation.
    Malformed {
        raw: String,
        reason: String,
    },
}

/// Everything a policy sees when choosing a turn.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub task: &'a TaskInstance,
    pub tools: &'a [ToolSchema],
    /// All prior (call, observation) pairs of this episode, in order.
    pub history: &'a [Step],
    /// Patient context for the curated single-turn setting.
    pub curated_context: Option<&'a str>,
    pub budget: &'a RuntimeBudget,
}

/// Failure to obtain any turn at all; ends the episode with `policy_error`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("policy failure: {0}")]
pub struct PolicyError(pub String);

pub trait Policy: Send + Sync {
    fn id(&self) -> String;

    fn next_turn(&self, ctx: &PolicyContext<'_>) -> Result<PolicyTurn, PolicyError>;
}
