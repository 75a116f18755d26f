//! Prompt text shown to chat-model policies. The templates live in
//! `prompts/` and are versioned by file name.

use clinseek_core::{AnswerKind, TaskInstance, ToolSchema};

use crate::budget::RuntimeBudget;

pub const SYSTEM_PROMPT_VERSION: &str = "system_v1";

const SYSTEM_V1: &str = include_str!("../prompts/system_v1.md");
const CURATED_V1: &str = include_str!("../prompts/curated_v1.md");

pub fn system_prompt(tools: &[ToolSchema], budget: &RuntimeBudget, curated: bool) -> String {
    if curated {
        return CURATED_V1.trim_end().to_string();
    }
    let tool_list: Vec<String> = tools
        .iter()
        .map(|t| format!("- {}: {}", t.name, t.description))
        .collect();
    SYSTEM_V1
        .replace("{max_chars}", &budget.max_tool_result_chars.to_string())
        .replace("{max_rounds}", &budget.max_rounds.to_string())
        .replace("{tool_list}", &tool_list.join("\n"))
        .trim_end()
        .to_string()
}

pub fn task_message(task: &TaskInstance, curated_context: Option<&str>) -> String {
    let mut out = String::new();
    match curated_context {
        Some(ctx) => {
            out.push_str(&format!("Patient {}. Recent events:\n{}\n\n", task.patient_id, ctx.trim_end()));
        }
        None => {
            out.push_str(&format!(
                "Patient {}. Question time: {}.\n",
                task.patient_id, task.cutoff
            ));
            if task.has_images() {
                out.push_str("Linked images:\n");
                for img in &task.modality_meta {
                    let view = img.view.as_deref().unwrap_or("unknown view");
                    out.push_str(&format!("- image_id {} (study {}, {view})\n", img.image_id, img.study_id));
                }
            }
            out.push('\n');
        }
    }
    out.push_str(&format!("Question: {}\n", task.instruction.trim()));
    let schema = &task.answer_schema;
    out.push_str(match schema.kind {
        AnswerKind::SingleLabel => "Answer format: exactly one answer.",
        AnswerKind::LabelSet => "Answer format: every label that applies.",
        AnswerKind::FreeList => "Answer format: a list of answers.",
    });
    if let Some(cands) = &schema.candidates {
        out.push_str(&format!("\nCandidates: {}", cands.join("; ")));
    }
    out
}
