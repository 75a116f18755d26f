use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::ErrorCode;

/// Maximum characters of a tool result shown to the policy.
pub const DEFAULT_MAX_TOOL_RESULT_CHARS: usize = 100_000;

/// Tool names exposed to policies.
pub mod names {
    pub const LOAD_EHR: &str = "ehr.load_ehr";
    pub const GET_TABLE_DESCRIPTION: &str = "ehr.get_table_description";
    pub const GET_TABLE_NAMES: &str = "ehr.get_table_names";
    pub const GET_COLUMN_NAMES: &str = "ehr.get_column_names";
    pub const GET_RECORDS_BY_TIME: &str = "ehr.get_records_by_time";
    pub const RUN_SQL_QUERY: &str = "ehr.run_sql_query";
    pub const GET_CANDIDATES_BY_SEMANTIC_SIMILARITY: &str =
        "ehr.get_candidates_by_semantic_similarity";
    pub const GET_CANDIDATES_BY_KEYWORD: &str = "ehr.get_candidates_by_keyword";
    pub const GET_LATEST_RECORDS: &str = "ehr.get_latest_records";
    pub const THINK: &str = "ehr.think";
    pub const FINISH: &str = "ehr.finish";

    pub const BROWSER_SEARCH: &str = "browser.search";
    pub const BROWSER_OPEN: &str = "browser.open";
    pub const BROWSER_FIND: &str = "browser.find";

    pub const DICOM_PROCESSOR: &str = "image.dicom_processor";
    pub const IMAGE_VISUALIZER: &str = "image.image_visualizer";
    pub const CHEST_XRAY_CLASSIFIER: &str = "image.chest_xray_classifier";
    pub const CHEST_XRAY_REPORT_GENERATOR: &str = "image.chest_xray_report_generator";
    pub const XRAY_PHRASE_GROUNDING: &str = "image.xray_phrase_grounding";
    pub const CHEST_XRAY_SEGMENTATION: &str = "image.chest_xray_segmentation";

    pub const EHR: [&str; 11] = [
        LOAD_EHR,
        GET_TABLE_DESCRIPTION,
        GET_TABLE_NAMES,
        GET_COLUMN_NAMES,
        GET_RECORDS_BY_TIME,
        RUN_SQL_QUERY,
        GET_CANDIDATES_BY_SEMANTIC_SIMILARITY,
        GET_CANDIDATES_BY_KEYWORD,
        GET_LATEST_RECORDS,
        THINK,
        FINISH,
    ];
    pub const BROWSER: [&str; 3] = [BROWSER_SEARCH, BROWSER_OPEN, BROWSER_FIND];
    pub const IMAGE: [&str; 6] = [
        DICOM_PROCESSOR,
        IMAGE_VISUALIZER,
        CHEST_XRAY_CLASSIFIER,
        CHEST_XRAY_REPORT_GENERATOR,
        XRAY_PHRASE_GROUNDING,
        CHEST_XRAY_SEGMENTATION,
    ];

    pub fn all() -> impl Iterator<Item = &'static str> {
        EHR.into_iter().chain(BROWSER).chain(IMAGE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    String,
    Integer,
    Number,
    Boolean,
    StringList,
}

impl ParamType {
    fn json_schema(&self) -> Value {
        match self {
            ParamType::String => serde_json::json!({"type": "string"}),
            ParamType::Integer => serde_json::json!({"type": "integer"}),
            ParamType::Number => serde_json::json!({"type": "number"}),
            ParamType::Boolean => serde_json::json!({"type": "boolean"}),
            ParamType::StringList => {
                serde_json::json!({"type": "array", "items": {"type": "string"}})
            }
        }
    }

    pub fn accepts(&self, value: &Value) -> bool {
        match self {
            ParamType::String => value.is_string(),
            ParamType::Integer => value.is_i64() || value.is_u64(),
            ParamType::Number => value.is_number(),
            ParamType::Boolean => value.is_boolean(),
            ParamType::StringList => value
                .as_array()
                .is_some_and(|items| items.iter().all(Value::is_string)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolParam {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
    pub description: String,
}

impl ToolParam {
    pub fn required(name: &str, ty: ParamType, description: &str) -> Self {
        Self {
            name: name.to_string(),
            ty,
            required: true,
            description: description.to_string(),
        }
    }

    pub fn optional(name: &str, ty: ParamType, description: &str) -> Self {
        Self {
            required: false,
            ..Self::required(name, ty, description)
        }
    }
}

/// The interface of one tool as declared to policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ToolParam>,
}

impl ToolSchema {
    pub fn new(name: &str, description: &str, parameters: Vec<ToolParam>) -> Self {
        Self {
            name: name.to_string(),
            description: description.to_string(),
            parameters,
        }
    }

    /// JSON-Schema object for the parameters, in declaration order.
    pub fn parameters_json_schema(&self) -> Value {
        let mut props = Map::new();
        let mut required = Vec::new();
        for p in &self.parameters {
            let mut schema = p.ty.json_schema();
            schema["description"] = Value::String(p.description.clone());
            props.insert(p.name.clone(), schema);
            if p.required {
                required.push(Value::String(p.name.clone()));
            }
        }
        serde_json::json!({
            "type": "object",
            "properties": props,
            "required": required,
        })
    }

    /// Checks required presence, types and unknown keys. Returns a message
    /// suitable for an error observation.
    pub fn check_arguments(&self, args: &Arguments) -> Result<(), String> {
        for p in &self.parameters {
            match args.get(&p.name) {
                None | Some(Value::Null) if p.required => {
                    return Err(format!("missing required argument `{}`", p.name))
                }
                None | Some(Value::Null) => {}
                Some(v) if !p.ty.accepts(v) => {
                    return Err(format!(
                        "argument `{}` must be of type {:?}, got {}",
                        p.name, p.ty, v
                    ))
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = args
            .keys()
            .find(|k| !self.parameters.iter().any(|p| &p.name == *k))
        {
            return Err(format!("unknown argument `{}` for {}", extra, self.name));
        }
        Ok(())
    }
}

pub type Arguments = Map<String, Value>;

/// One action a_k taken by the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub step_index: u32,
    pub name: String,
    pub arguments: Arguments,
    /// Free text the policy emitted alongside the call. Not scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationStatus {
    Ok,
    Error,
}

/// The environment's response o_k to a call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step_index: u32,
    pub status: ObservationStatus,
    pub content: String,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    pub latency_ms: u64,
}

impl Observation {
    /// Builds an observation, cutting `raw` to at most `limit` characters.
    pub fn new(
        step_index: u32,
        status: ObservationStatus,
        raw: String,
        limit: usize,
        error_code: Option<ErrorCode>,
        latency_ms: u64,
    ) -> Self {
        let (content, truncated) = truncate_chars(raw, limit);
        Self {
            step_index,
            status,
            content,
            truncated,
            error_code,
            latency_ms,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ObservationStatus::Ok
    }
}

/// A failed tool invocation: the code that lands in the observation plus a
/// human-readable message for the policy.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ToolFailure {
    pub code: ErrorCode,
    pub message: String,
}

impl ToolFailure {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

/// Content of a successful call, or the failure.
pub type ToolOutput = Result<String, ToolFailure>;

fn truncate_chars(raw: String, limit: usize) -> (String, bool) {
    match raw.char_indices().nth(limit) {
        None => (raw, false),
        Some((byte_idx, _)) => {
            let mut s = raw;
            s.truncate(byte_idx);
            (s, true)
        }
    }
}
