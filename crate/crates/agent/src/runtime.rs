use std::time::Instant;

use clinseek_core::{
    names, Arguments, ErrorCode, Observation, ObservationStatus, Step, TaskInstance, Termination, ToolCall,
    Trajectory,
};
use serde_json::Value as Json;

use crate::budget::RuntimeBudget;
use crate::policy::{Policy, PolicyContext, PolicyTurn};
use crate::registry::Registry;

/// Name recorded for a turn that could not be decoded into a tool call.
pub const MALFORMED_TOOL: &str = "<malformed>";

/// Runs one evidence-seeking episode.
pub fn run_episode(task: &TaskInstance, policy: &dyn Policy, registry: &mut Registry, budget: &RuntimeBudget) -> Trajectory {
    run_episode_with(task, policy, registry, budget, None)
}

/// Runs one episode; `curated_context` switches the policy to the
/// single-turn setting where the context is given up front.
pub fn run_episode_with(
    task: &TaskInstance,
    policy: &dyn Policy,
    registry: &mut Registry,
    budget: &RuntimeBudget,
    curated_context: Option<&str>,
) -> Trajectory {
    let start = Instant::now();
    let tools = registry.schemas();
    let mut steps: Vec<Step> = Vec::new();
    let mut final_answer = None;

    let termination = loop {
        if steps.len() >= budget.max_rounds {
            break Termination::RoundBudgetExhausted;
        }
        if budget.episode_wall_clock_limit.is_some_and(|lim| start.elapsed() >= lim) {
            break Termination::RoundBudgetExhausted;
        }
        let ctx = PolicyContext {
            task,
            tools: &tools,
            history: &steps,
            curated_context,
            budget,
        };
        let turn = match policy.next_turn(&ctx) {
            Ok(t) => t,
            Err(_) => break Termination::PolicyError,
        };
        let step_index = steps.len() as u32 + 1;
        let (name, arguments, reasoning) = match turn {
            PolicyTurn::Call { name, arguments, reasoning } => (name, arguments, reasoning),
            PolicyTurn::Finish { answers, reasoning } => {
                let mut args = Arguments::new();
                args.insert("answers".into(), Json::from(answers));
                (names::FINISH.to_string(), args, reasoning)
            }
            PolicyTurn::Malformed { raw, reason } => {
                let mut args = Arguments::new();
                args.insert("raw".into(), Json::String(raw));
                let content = format!("{}: {reason}", ErrorCode::MalformedCall);
                steps.push(Step {
                    call: ToolCall { step_index, name: MALFORMED_TOOL.into(), arguments: args, reasoning: None },
                    observation: Observation::new(
                        step_index,
                        ObservationStatus::Error,
                        content,
                        budget.max_tool_result_chars,
                        Some(ErrorCode::MalformedCall),
                        0,
                    ),
                });
                continue;
            }
        };

        let t0 = Instant::now();
        let (result, answers) = if name == names::FINISH {
            match registry.finish(&arguments) {
                Ok(outcome) => (Ok(outcome.render()), Some(outcome.answers)),
                Err(e) => (Err(e), None),
            }
        } else {
            (registry.call(&name, &arguments), None)
        };
        let latency_ms = t0.elapsed().as_millis() as u64;
        let observation = match result {
            Ok(content) => Observation::new(
                step_index,
                ObservationStatus::Ok,
                content,
                budget.max_tool_result_chars,
                None,
                latency_ms,
            ),
            Err(f) => Observation::new(
                step_index,
                ObservationStatus::Error,
                f.to_string(),
                budget.max_tool_result_chars,
                Some(f.code),
                latency_ms,
            ),
        };
        steps.push(Step {
            call: ToolCall { step_index, name, arguments, reasoning },
            observation,
        });
        if answers.is_some() {
            final_answer = answers;
            break Termination::Finished;
        }
    };

    Trajectory {
        task: task.clone(),
        steps,
        final_answer,
        termination,
        policy_id: policy.id(),
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}
