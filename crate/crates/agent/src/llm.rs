//! Policy backed by an OpenAI-compatible chat-completions endpoint.

use std::time::Duration;

use clinseek_core::{names, Arguments, Step, ToolSchema};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::policy::{Policy, PolicyContext, PolicyError, PolicyTurn};
use crate::prompt::{system_prompt, task_message, SYSTEM_PROMPT_VERSION};
use crate::runtime::MALFORMED_TOOL;

pub const DEFAULT_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_MAX_RETRIES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Base URL; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    /// Retries after the first attempt on transport errors, 429 and 5xx.
    pub max_retries: u32,
    /// Delay before retry i is `backoff_ms * 2^i`.
    pub backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1".into(),
            model: "default".into(),
            api_key: None,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: crate::budget::DEFAULT_MAX_OUTPUT_TOKENS,
            timeout_secs: 600,
            max_retries: DEFAULT_MAX_RETRIES,
            backoff_ms: 1000,
        }
    }
}

/// Tool names on the wire: function names may not contain dots.
pub fn wire_name(name: &str) -> String {
    name.replace('.', "__")
}

pub fn unwire_name(name: &str) -> String {
    name.replace("__", ".")
}

pub struct LlmPolicy {
    config: LlmConfig,
    http: reqwest::blocking::Client,
}

impl LlmPolicy {
    pub fn new(config: LlmConfig) -> Result<Self, PolicyError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| PolicyError(format!("http client: {e}")))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// The request body for one turn.
    pub fn request_body(&self, ctx: &PolicyContext<'_>) -> Json {
        let curated = ctx.curated_context.is_some();
        let mut messages = vec![
            json!({"role": "system", "content": system_prompt(ctx.tools, ctx.budget, curated)}),
            json!({"role": "user", "content": task_message(ctx.task, ctx.curated_context)}),
        ];
        for step in ctx.history {
            push_step(&mut messages, step);
        }
        json!({
            "model": self.config.model,
            "messages": messages,
            "tools": ctx.tools.iter().map(tool_json).collect::<Vec<_>>(),
            "tool_choice": "auto",
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
    }

    fn post(&self, body: &Json) -> Result<Json, PolicyError> {
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            let mut req = self.http.post(&url).json(body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Err(e) => last = format!("transport: {e}"),
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<Json>()
                            .map_err(|e| PolicyError(format!("undecodable response body: {e}")));
                    }
                    let text = resp.text().unwrap_or_default();
                    last = format!("HTTP {status}: {}", text.chars().take(300).collect::<String>());
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(PolicyError(last));
                    }
                }
            }
        }
        Err(PolicyError(format!(
            "gave up after {} attempts: {last}",
            self.config.max_retries + 1
        )))
    }
}

fn tool_json(schema: &ToolSchema) -> Json {
    json!({
        "type": "function",
        "function": {
            "name": wire_name(&schema.name),
            "description": schema.description,
            "parameters": schema.parameters_json_schema(),
        }
    })
}

fn push_step(messages: &mut Vec<Json>, step: &Step) {
    let call = &step.call;
    if call.name == MALFORMED_TOOL {
        let raw = call.arguments.get("raw").and_then(Json::as_str).unwrap_or_default();
        messages.push(json!({"role": "assistant", "content": raw}));
        messages.push(json!({"role": "user", "content": step.observation.content}));
        return;
    }
    let id = format!("call_{}", call.step_index);
    messages.push(json!({
        "role": "assistant",
        "content": call.reasoning,
        "tool_calls": [{
            "id": id,
            "type": "function",
            "function": {
                "name": wire_name(&call.name),
                "arguments": Json::Object(call.arguments.clone()).to_string(),
            }
        }]
    }));
    messages.push(json!({"role": "tool", "tool_call_id": id, "content": step.observation.content}));
}

/// Decodes a chat-completions response into a turn.
pub fn decode_response(body: &Json) -> Result<PolicyTurn, PolicyError> {
    let message = body
        .pointer("/choices/0/message")
        .ok_or_else(|| PolicyError("response has no choices[0].message".into()))?;
    let reasoning = ["content", "reasoning_content"]
        .iter()
        .filter_map(|k| message.get(*k).and_then(Json::as_str))
        .map(str::trim)
        .find(|s| !s.is_empty())
        .map(str::to_string);
    let Some(call) = message.pointer("/tool_calls/0") else {
        return Ok(PolicyTurn::Malformed {
            raw: reasoning.unwrap_or_default(),
            reason: format!("no tool call in reply; respond with exactly one tool call, e.g. {}", names::FINISH),
        });
    };
    let raw = call.to_string();
    let Some(name) = call.pointer("/function/name").and_then(Json::as_str) else {
        return Ok(PolicyTurn::Malformed { raw, reason: "tool call has no function name".into() });
    };
    let name = unwire_name(name);
    let arguments: Arguments = match call.pointer("/function/arguments") {
        None | Some(Json::Null) => Arguments::new(),
        Some(Json::String(s)) if s.trim().is_empty() => Arguments::new(),
        Some(Json::String(s)) => match serde_json::from_str::<Json>(s) {
            Ok(Json::Object(m)) => m,
            Ok(_) => {
                return Ok(PolicyTurn::Malformed { raw, reason: "tool arguments must be a JSON object".into() })
            }
            Err(e) => {
                return Ok(PolicyTurn::Malformed { raw, reason: format!("tool arguments are not valid JSON: {e}") })
            }
        },
        Some(Json::Object(m)) => m.clone(),
        Some(_) => {
            return Ok(PolicyTurn::Malformed { raw, reason: "tool arguments must be a JSON object".into() })
        }
    };
    if name == names::FINISH {
        if let Some(answers) = string_list(arguments.get("answers")) {
            return Ok(PolicyTurn::Finish { answers, reasoning });
        }
    }
    Ok(PolicyTurn::Call { name, arguments, reasoning })
}

fn string_list(v: Option<&Json>) -> Option<Vec<String>> {
    v?.as_array()?
        .iter()
        .map(|x| x.as_str().map(str::to_string))
        .collect()
}

impl Policy for LlmPolicy {
    fn id(&self) -> String {
        format!("llm:{}@{}", self.config.model, SYSTEM_PROMPT_VERSION)
    }

    fn next_turn(&self, ctx: &PolicyContext<'_>) -> Result<PolicyTurn, PolicyError> {
        let body = self.request_body(ctx);
        decode_response(&self.post(&body)?)
    }
}
