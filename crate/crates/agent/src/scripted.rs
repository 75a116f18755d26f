//! Deterministic replay policies used for tests, demos and smoke runs.

use std::path::Path;

use clinseek_core::{names, Arguments, TaskInstance};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::policy::{Policy, PolicyContext, PolicyError, PolicyTurn};

/// Placeholder replaced by the task's first image id.
pub const IMAGE_ID_PLACEHOLDER: &str = "$image_id";

/// One scripted action, as written in a script file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptAction {
    Finish {
        finish: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reasoning: Option<String>,
    },
    Call {
        tool: String,
        #[serde(default)]
        arguments: Arguments,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reasoning: Option<String>,
    },
}

impl ScriptAction {
    pub fn call(tool: &str, arguments: Json) -> Self {
        ScriptAction::Call {
            tool: tool.to_string(),
            arguments: arguments.as_object().cloned().unwrap_or_default(),
            reasoning: None,
        }
    }

    pub fn finish<S: Into<String>>(answers: impl IntoIterator<Item = S>) -> Self {
        ScriptAction::Finish {
            finish: answers.into_iter().map(Into::into).collect(),
            reasoning: None,
        }
    }

    fn tool(&self) -> &str {
        match self {
            ScriptAction::Finish { .. } => names::FINISH,
            ScriptAction::Call { tool, .. } => tool,
        }
    }
}

/// Replays a fixed list of actions and repeats the last one once the list
/// is exhausted.
///
/// Actions naming a tool the episode does not offer are skipped, so one
/// script can drive text-only and multimodal tasks alike. The policy is
/// stateless: the action at turn k is chosen from the history length.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    name: String,
    script: Vec<ScriptAction>,
    /// Replace a `Finish` with an answer picked from the task's candidates.
    pick_candidate: bool,
}

impl ScriptedPolicy {
    pub fn new(name: &str, script: Vec<ScriptAction>) -> Self {
        Self {
            name: name.to_string(),
            script,
            pick_candidate: false,
        }
    }

    /// Reads a JSON array of actions.
    pub fn from_file(path: &Path) -> Result<Self, PolicyError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| PolicyError(format!("cannot read script {}: {e}", path.display())))?;
        let script: Vec<ScriptAction> = serde_json::from_str(&raw)
            .map_err(|e| PolicyError(format!("invalid script {}: {e}", path.display())))?;
        let name = path.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned());
        Ok(Self::new(&name, script))
    }

    /// `demo`: a short tour over EHR, knowledge and image tools ending in a
    /// finish. `loop`: load the EHR, then list tables forever.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "demo" => Some(Self {
                pick_candidate: true,
                ..Self::new("demo", demo_script())
            }),
            "loop" => Some(Self::new(
                "loop",
                vec![
                    ScriptAction::call(names::LOAD_EHR, json!({})),
                    ScriptAction::call(names::GET_TABLE_NAMES, json!({})),
                ],
            )),
            _ => None,
        }
    }

    pub fn script(&self) -> &[ScriptAction] {
        &self.script
    }
}

fn demo_script() -> Vec<ScriptAction> {
    let img = IMAGE_ID_PLACEHOLDER;
    vec![
        ScriptAction::call(names::LOAD_EHR, json!({})),
        ScriptAction::call(names::GET_TABLE_NAMES, json!({})),
        ScriptAction::call(names::GET_LATEST_RECORDS, json!({"table": "labevents"})),
        ScriptAction::call(
            names::RUN_SQL_QUERY,
            json!({"sql": "SELECT drug, COUNT(*) AS n FROM prescriptions GROUP BY drug ORDER BY n DESC, drug LIMIT 5"}),
        ),
        ScriptAction::call(
            names::GET_CANDIDATES_BY_SEMANTIC_SIMILARITY,
            json!({"query": "sepsis", "table": "d_icd_diagnoses", "top_k": 3}),
        ),
        ScriptAction::call(names::BROWSER_SEARCH, json!({"query": "sepsis antibiotics"})),
        ScriptAction::call(names::CHEST_XRAY_CLASSIFIER, json!({"image_id": img})),
        ScriptAction::call(names::CHEST_XRAY_REPORT_GENERATOR, json!({"image_id": img})),
        ScriptAction::call(names::THINK, json!({"note": "Evidence gathered; answering."})),
        ScriptAction::finish(["unknown"]),
    ]
}

/// Stable FNV-1a hash, so candidate picks do not depend on the platform.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn substitute(value: &mut Json, image_id: &str) {
    match value {
        Json::String(s) if s.contains(IMAGE_ID_PLACEHOLDER) => {
            *s = s.replace(IMAGE_ID_PLACEHOLDER, image_id);
        }
        Json::Array(items) => items.iter_mut().for_each(|v| substitute(v, image_id)),
        Json::Object(map) => map.values_mut().for_each(|v| substitute(v, image_id)),
        _ => {}
    }
}

fn picked_answer(task: &TaskInstance) -> Option<String> {
    let cands = task.answer_schema.candidates.as_ref().filter(|c| !c.is_empty())?;
    Some(cands[(fnv1a(&task.task_id) % cands.len() as u64) as usize].clone())
}

impl Policy for ScriptedPolicy {
    fn id(&self) -> String {
        format!("scripted:{}", self.name)
    }

    fn next_turn(&self, ctx: &PolicyContext<'_>) -> Result<PolicyTurn, PolicyError> {
        let offered: Vec<&ScriptAction> = self
            .script
            .iter()
            .filter(|a| ctx.tools.iter().any(|t| t.name == a.tool()))
            .collect();
        let action = match offered.len() {
            0 => return Err(PolicyError(format!("script {:?} has no action for this episode", self.name))),
            n => offered[ctx.history.len().min(n - 1)],
        };
        Ok(match action {
            ScriptAction::Finish { finish, reasoning } => PolicyTurn::Finish {
                answers: match (self.pick_candidate, picked_answer(ctx.task)) {
                    (true, Some(a)) => vec![a],
                    _ => finish.clone(),
                },
                reasoning: reasoning.clone(),
            },
            ScriptAction::Call { tool, arguments, reasoning } => {
                let mut args = Json::Object(arguments.clone());
                if let Some(img) = ctx.task.modality_meta.first() {
                    substitute(&mut args, &img.image_id);
                }
                PolicyTurn::Call {
                    name: tool.clone(),
                    arguments: args.as_object().cloned().unwrap_or_default(),
                    reasoning: reasoning.clone(),
                }
            }
        })
    }
}
