use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use clinseek_core::{dedup_normalized, AnswerSchema, ImageRef, TaskGroup, TaskInstance, Timestamp};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

/// Most events a curated context holds.
pub const MAX_CONTEXT_EVENTS: usize = 100;

/// One pre-selected patient event in a curated context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEvent {
    pub time: Timestamp,
    pub text: String,
    /// Source table, when known. Used to locate the event in a snapshot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    /// Column values identifying the source row.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub key: BTreeMap<String, String>,
}

/// A task in the curated-input setting: instruction plus the patient events
/// selected for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedExample {
    pub task_id: String,
    pub patient_id: String,
    pub instruction: String,
    pub context_events: Vec<ContextEvent>,
    pub gold_answers: Vec<String>,
    pub group: TaskGroup,
    /// Sampling unit for per-subtask quotas; defaults to the group name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtask: Option<String>,
    #[serde(default)]
    pub modality_meta: Vec<ImageRef>,
    #[serde(default)]
    pub answer_schema: AnswerSchema,
}

impl CuratedExample {
    pub fn subtask_key(&self) -> String {
        self.subtask.clone().unwrap_or_else(|| self.group.as_str().to_string())
    }

    /// Latest event time. Independent of event order.
    pub fn derived_cutoff(&self) -> Option<Timestamp> {
        self.context_events.iter().map(|e| e.time).max()
    }

    /// Context rendered one event per line, as shown to curated-input models.
    pub fn context_text(&self) -> String {
        self.context_events
            .iter()
            .map(|e| format!("{} {}", e.time, e.text))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.task_id.trim().is_empty() {
            return Err("task_id must be nonempty".into());
        }
        if self.patient_id.trim().is_empty() {
            return Err("patient_id must be nonempty".into());
        }
        if self.gold_answers.is_empty() {
            return Err("gold_answers must be nonempty".into());
        }
        if self.context_events.len() > MAX_CONTEXT_EVENTS {
            return Err(format!(
                "{} context events, at most {MAX_CONTEXT_EVENTS}",
                self.context_events.len()
            ));
        }
        if let Some(w) = self.context_events.windows(2).find(|w| w[1].time < w[0].time) {
            return Err(format!("context events out of order at {}", w[1].time));
        }
        self.answer_schema.validate().map_err(|e| e.to_string())
    }
}

/// The evidence-seeking counterpart of a curated example. Context is
/// dropped; the cutoff is the latest context event time.
pub fn to_agentic(curated: &CuratedExample) -> Result<TaskInstance, BenchError> {
    let cutoff = curated.derived_cutoff().ok_or_else(|| BenchError::EmptyContext {
        task_id: curated.task_id.clone(),
    })?;
    Ok(TaskInstance {
        task_id: curated.task_id.clone(),
        patient_id: curated.patient_id.clone(),
        cutoff,
        instruction: curated.instruction.clone(),
        modality_meta: curated.modality_meta.clone(),
        answer_schema: curated.answer_schema.clone(),
        group: curated.group,
    })
}

/// A curated example and its evidence-seeking task, sharing id and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedExample {
    pub curated: CuratedExample,
    pub agentic: TaskInstance,
    /// Normalized gold labels shared by both settings.
    pub gold_answers: Vec<String>,
}

impl PairedExample {
    pub fn new(curated: CuratedExample) -> Result<Self, BenchError> {
        let agentic = to_agentic(&curated)?;
        let gold_answers = dedup_normalized(&curated.gold_answers);
        Ok(Self {
            curated,
            agentic,
            gold_answers,
        })
    }

    pub fn task_id(&self) -> &str {
        &self.agentic.task_id
    }

    /// Instruction, id and labels agree across the two settings.
    pub fn is_consistent(&self) -> bool {
        self.curated.task_id == self.agentic.task_id
            && self.curated.instruction == self.agentic.instruction
            && self.curated.patient_id == self.agentic.patient_id
            && self.curated.group == self.agentic.group
            && dedup_normalized(&self.curated.gold_answers) == self.gold_answers
            && self.curated.derived_cutoff() == Some(self.agentic.cutoff)
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, BenchError> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BenchError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| BenchError::malformed(&name, i + 1, e.to_string()))?;
        out.push(v);
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), BenchError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| BenchError::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("benchmark records serialize");
        writeln!(w, "{line}").map_err(|e| BenchError::io(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

/// Reads curated examples, validating each and rejecting duplicate ids.
pub fn read_curated(path: &Path) -> Result<Vec<CuratedExample>, BenchError> {
    let examples: Vec<CuratedExample> = read_jsonl(path)?;
    check_examples(&examples, &path.display().to_string())?;
    Ok(examples)
}

pub(crate) fn check_examples(examples: &[CuratedExample], source_name: &str) -> Result<(), BenchError> {
    let mut seen = HashSet::new();
    for (i, ex) in examples.iter().enumerate() {
        ex.validate()
            .map_err(|m| BenchError::malformed(source_name, i + 1, format!("{}: {m}", ex.task_id)))?;
        if !seen.insert(ex.task_id.as_str()) {
            return Err(BenchError::malformed(
                source_name,
                i + 1,
                format!("duplicate task_id {}", ex.task_id),
            ));
        }
    }
    Ok(())
}

pub fn write_curated(path: &Path, examples: &[CuratedExample]) -> Result<(), BenchError> {
    write_jsonl(path, examples)
}

pub fn read_benchmark(path: &Path) -> Result<Vec<PairedExample>, BenchError> {
    read_jsonl(path)
}

pub fn write_benchmark(path: &Path, pairs: &[PairedExample]) -> Result<(), BenchError> {
    write_jsonl(path, pairs)
}
