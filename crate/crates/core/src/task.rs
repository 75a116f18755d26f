use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::answer::normalize_answer;
use crate::time::Timestamp;

/// Task groups across the text-only and multimodal benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskGroup {
    RiskPrediction,
    DecisionMaking,
    CxrPresence,
    CxrEnumeration,
    CxrChange,
    #[serde(rename = "decompensation_24h")]
    Decompensation24h,
    InpatientMortality,
    Phenotype,
    External,
}

impl TaskGroup {
    pub const ALL: [TaskGroup; 9] = [
        TaskGroup::RiskPrediction,
        TaskGroup::DecisionMaking,
        TaskGroup::CxrPresence,
        TaskGroup::CxrEnumeration,
        TaskGroup::CxrChange,
        TaskGroup::Decompensation24h,
        TaskGroup::InpatientMortality,
        TaskGroup::Phenotype,
        TaskGroup::External,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskGroup::RiskPrediction => "risk_prediction",
            TaskGroup::DecisionMaking => "decision_making",
            TaskGroup::CxrPresence => "cxr_presence",
            TaskGroup::CxrEnumeration => "cxr_enumeration",
            TaskGroup::CxrChange => "cxr_change",
            TaskGroup::Decompensation24h => "decompensation_24h",
            TaskGroup::InpatientMortality => "inpatient_mortality",
            TaskGroup::Phenotype => "phenotype",
            TaskGroup::External => "external",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.as_str() == s)
    }

    pub fn is_multimodal(&self) -> bool {
        matches!(
            self,
            TaskGroup::CxrPresence
                | TaskGroup::CxrEnumeration
                | TaskGroup::CxrChange
                | TaskGroup::Decompensation24h
                | TaskGroup::InpatientMortality
                | TaskGroup::Phenotype
        )
    }
}

impl fmt::Display for TaskGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    SingleLabel,
    LabelSet,
    FreeList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSchema {
    pub kind: AnswerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_answers: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("single_label answer schema must have max_answers = 1")]
    SingleLabelMax,
    #[error("max_answers must be positive")]
    ZeroMaxAnswers,
    #[error("duplicate candidate after normalization: {0:?}")]
    DuplicateCandidate(String),
    #[error("patient_id must be nonempty")]
    EmptyPatient,
    #[error("task_id must be nonempty")]
    EmptyTaskId,
    #[error("duplicate image_id {0:?} in modality metadata")]
    DuplicateImage(String),
}

impl AnswerSchema {
    pub fn single_label(candidates: Option<Vec<String>>) -> Self {
        Self {
            kind: AnswerKind::SingleLabel,
            candidates,
            max_answers: Some(1),
        }
    }

    pub fn free_list() -> Self {
        Self {
            kind: AnswerKind::FreeList,
            candidates: None,
            max_answers: None,
        }
    }

    pub fn label_set(candidates: Vec<String>) -> Self {
        Self {
            kind: AnswerKind::LabelSet,
            candidates: Some(candidates),
            max_answers: None,
        }
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        match (self.kind, self.max_answers) {
            (AnswerKind::SingleLabel, Some(1)) => {}
            (AnswerKind::SingleLabel, _) => return Err(SchemaError::SingleLabelMax),
            (_, Some(0)) => return Err(SchemaError::ZeroMaxAnswers),
            _ => {}
        }
        if let Some(cands) = &self.candidates {
            let mut seen = HashSet::new();
            for c in cands {
                let norm = normalize_answer(c);
                if !seen.insert(norm.clone()) {
                    return Err(SchemaError::DuplicateCandidate(norm));
                }
            }
        }
        Ok(())
    }
}

impl Default for AnswerSchema {
    fn default() -> Self {
        Self::free_list()
    }
}

/// One linked image for a multimodal task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub study_id: String,
    pub image_id: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<String>,
}

/// A task as handed to an evidence-seeking agent: who, as of when, what to
/// answer, which images are linked, and what shape the answer takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task_id: String,
    pub patient_id: String,
    pub cutoff: Timestamp,
    pub instruction: String,
    #[serde(default)]
    pub modality_meta: Vec<ImageRef>,
    #[serde(default)]
    pub answer_schema: AnswerSchema,
    pub group: TaskGroup,
}

impl TaskInstance {
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.patient_id.trim().is_empty() {
            return Err(SchemaError::EmptyPatient);
        }
        if self.task_id.trim().is_empty() {
            return Err(SchemaError::EmptyTaskId);
        }
        let mut ids = HashSet::new();
        for img in &self.modality_meta {
            if !ids.insert(img.image_id.as_str()) {
                return Err(SchemaError::DuplicateImage(img.image_id.clone()));
            }
        }
        self.answer_schema.validate()
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageRef> {
        self.modality_meta.iter().find(|i| i.image_id == image_id)
    }

    pub fn has_images(&self) -> bool {
        !self.modality_meta.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task() -> TaskInstance {
        TaskInstance {
            task_id: "t1".into(),
            patient_id: "10000001".into(),
            cutoff: Timestamp::parse("2150-01-02 03:04:05").unwrap(),
            instruction: "Predict the next drug.".into(),
            modality_meta: vec![],
            answer_schema: AnswerSchema::free_list(),
            group: TaskGroup::DecisionMaking,
        }
    }

    #[test]
    fn single_label_requires_max_one() {
        let mut s = AnswerSchema::single_label(None);
        assert!(s.validate().is_ok());
        s.max_answers = Some(2);
        assert_eq!(s.validate(), Err(SchemaError::SingleLabelMax));
        s.max_answers = None;
        assert_eq!(s.validate(), Err(SchemaError::SingleLabelMax));
    }

    #[test]
    fn candidates_unique_after_normalization() {
        let s = AnswerSchema::label_set(vec!["Yes".into(), "yes.".into()]);
        assert_eq!(
            s.validate(),
            Err(SchemaError::DuplicateCandidate("yes".into()))
        );
    }

    #[test]
    fn task_validation() {
        let mut t = task();
        assert!(t.validate().is_ok());
        t.patient_id = " ".into();
        assert_eq!(t.validate(), Err(SchemaError::EmptyPatient));
    }

    #[test]
    fn group_names_round_trip() {
        for g in TaskGroup::ALL {
            assert_eq!(TaskGroup::parse(g.as_str()), Some(g));
            let json = serde_json::to_string(&g).unwrap();
            assert_eq!(json, format!("\"{}\"", g.as_str()));
        }
    }

    #[test]
    fn task_json_shape() {
        let t = task();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["cutoff"], "2150-01-02T03:04:05");
        assert_eq!(v["answer_schema"]["kind"], "free_list");
        let back: TaskInstance = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }
}
