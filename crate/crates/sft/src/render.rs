use clinseek_agent::{system_prompt, task_message, tool_schemas_for, RuntimeBudget, MALFORMED_TOOL};
use clinseek_core::{Arguments, Termination, ToolSchema, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::error::SftError;

pub const TOOL_CALL_OPEN: &str = "<tool_call>";
pub const TOOL_CALL_CLOSE: &str = "</tool_call>";
pub const TOOL_RESPONSE_OPEN: &str = "<tool_response>";
pub const TOOL_RESPONSE_CLOSE: &str = "</tool_response>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftSample {
    pub task_id: String,
    pub messages: Vec<Message>,
    pub token_count: usize,
    pub kept: bool,
}

/// Escapes free text so it cannot contain a delimiter: `&` becomes `&amp;`
/// and the `<` opening any `<tool_` or `</tool_` becomes `&lt;`.
pub fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace("<tool_", "&lt;tool_").replace("</tool_", "&lt;/tool_")
}

pub fn unescape_text(s: &str) -> String {
    s.replace("&lt;/tool_", "</tool_").replace("&lt;tool_", "<tool_").replace("&amp;", "&")
}

/// Compact JSON with angle brackets written as `\u003c` and `\u003e`. They can
/// only occur inside JSON strings, so the result stays valid JSON.
fn call_json(name: &str, arguments: &Arguments) -> String {
    json!({"name": name, "arguments": Json::Object(arguments.clone())})
        .to_string()
        .replace('<', "\\u003c")
        .replace('>', "\\u003e")
}

pub fn system_message(tools: &[ToolSchema]) -> String {
    let budget = RuntimeBudget::default();
    let mut out = system_prompt(tools, &budget, false);
    out.push_str("\n\n# Tools\n\n<tools>\n");
    for t in tools {
        let schema = json!({
            "type": "function",
            "function": {"name": t.name, "description": t.description, "parameters": t.parameters_json_schema()}
        });
        out.push_str(&schema.to_string());
        out.push('\n');
    }
    out.push_str("</tools>\n\nFor each call, return a JSON object with the function name and arguments within <tool_call></tool_call> tags.");
    out
}

/// Renders a finished trajectory in the native tool-call chat format.
///
/// Every step becomes an assistant message (reasoning, then the call block)
/// followed by a tool message holding the observation. A malformed turn is
/// an assistant message with the raw text and no call block.
pub fn render(trajectory: &Trajectory) -> Result<Vec<Message>, SftError> {
    if trajectory.termination != Termination::Finished {
        return Err(SftError::UnfinishedTrajectory(trajectory.task.task_id.clone()));
    }
    let tools = tool_schemas_for(&trajectory.task);
    let mut messages = vec![
        Message { role: Role::System, content: system_message(&tools) },
        Message { role: Role::User, content: task_message(&trajectory.task, None) },
    ];
    for step in &trajectory.steps {
        let call = &step.call;
        let content = if call.name == MALFORMED_TOOL {
            let raw = call.arguments.get("raw").and_then(Json::as_str).unwrap_or_default();
            escape_text(raw)
        } else {
            let mut c = String::new();
            if let Some(r) = &call.reasoning {
                c.push_str(&escape_text(r));
                c.push('\n');
            }
            c.push_str(TOOL_CALL_OPEN);
            c.push('\n');
            c.push_str(&call_json(&call.name, &call.arguments));
            c.push('\n');
            c.push_str(TOOL_CALL_CLOSE);
            c
        };
        messages.push(Message { role: Role::Assistant, content });
        messages.push(Message {
            role: Role::Tool,
            content: format!(
                "{TOOL_RESPONSE_OPEN}\n{}\n{TOOL_RESPONSE_CLOSE}",
                escape_text(&step.observation.content)
            ),
        });
    }
    Ok(messages)
}

/// One step recovered from rendered messages.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedStep {
    pub name: String,
    pub arguments: Arguments,
    pub reasoning: Option<String>,
    pub observation: String,
}

/// Inverse of [`render`] for the steps.
pub fn parse(messages: &[Message]) -> Result<Vec<ParsedStep>, SftError> {
    let bad = |i: usize, m: &str| SftError::Malformed { message_index: i, message: m.to_string() };
    match messages {
        [s, u, ..] if s.role == Role::System && u.role == Role::User => {}
        _ => return Err(bad(0, "expected system then user message")),
    }
    let rest = &messages[2..];
    if rest.len() % 2 == 1 {
        return Err(bad(messages.len() - 1, "assistant message without tool response"));
    }
    let mut steps = Vec::with_capacity(rest.len() / 2);
    for (k, pair) in rest.chunks(2).enumerate() {
        let i = 2 + 2 * k;
        let (a, t) = (&pair[0], &pair[1]);
        if a.role != Role::Assistant || t.role != Role::Tool {
            return Err(bad(i, "expected assistant then tool message"));
        }
        let observation = t
            .content
            .strip_prefix(TOOL_RESPONSE_OPEN)
            .and_then(|s| s.strip_prefix('\n'))
            .and_then(|s| s.strip_suffix(TOOL_RESPONSE_CLOSE))
            .and_then(|s| s.strip_suffix('\n'))
            .ok_or_else(|| bad(i + 1, "tool message is not a delimited tool response"))?;
        let observation = unescape_text(observation);
        let (name, arguments, reasoning) = match a.content.find(TOOL_CALL_OPEN) {
            None => {
                let mut args = Arguments::new();
                args.insert("raw".into(), Json::String(unescape_text(&a.content)));
                (MALFORMED_TOOL.to_string(), args, None)
            }
            Some(at) => {
                let reasoning = match at {
                    0 => None,
                    _ => Some(unescape_text(
                        a.content[..at].strip_suffix('\n').ok_or_else(|| bad(i, "reasoning not followed by newline"))?,
                    )),
                };
                let body = a.content[at + TOOL_CALL_OPEN.len()..]
                    .strip_prefix('\n')
                    .and_then(|s| s.strip_suffix(TOOL_CALL_CLOSE))
                    .and_then(|s| s.strip_suffix('\n'))
                    .ok_or_else(|| bad(i, "unterminated tool call block"))?;
                let v: Json = serde_json::from_str(body).map_err(|e| bad(i, &format!("call payload: {e}")))?;
                let name = v["name"].as_str().ok_or_else(|| bad(i, "call has no name"))?.to_string();
                let arguments = v["arguments"].as_object().cloned().ok_or_else(|| bad(i, "call has no arguments"))?;
                (name, arguments, reasoning)
            }
        };
        steps.push(ParsedStep { name, arguments, reasoning, observation });
    }
    Ok(steps)
}
