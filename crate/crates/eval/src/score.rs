use std::collections::{BTreeSet, HashMap};

use clinseek_core::{dedup_normalized, Termination, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Sample-wise F1 in percent between normalized label sets:
/// `200 |P ∩ G| / (|P| + |G|)`. Order and duplicates do not matter. For a
/// single gold label and at most one prediction this is accuracy.
pub fn score_sample<P: AsRef<str>, G: AsRef<str>>(predicted: &[P], gold: &[G]) -> Result<f64, EvalError> {
    let g: BTreeSet<String> = dedup_normalized(gold).into_iter().filter(|s| !s.is_empty()).collect();
    if g.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let p: BTreeSet<String> = dedup_normalized(predicted).into_iter().filter(|s| !s.is_empty()).collect();
    let hits = p.intersection(&g).count();
    Ok(200.0 * hits as f64 / (p.len() + g.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub task_id: String,
    pub group: String,
    pub f1: f64,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
    pub termination: Termination,
}

/// Scores each trajectory against `gold` (task id → labels). Unfinished
/// trajectories have no prediction and score 0.
pub fn score_trajectories(
    trajectories: &[Trajectory],
    gold: &HashMap<String, Vec<String>>,
) -> Result<Vec<EvalRecord>, EvalError> {
    trajectories
        .iter()
        .map(|t| {
            let g = gold
                .get(&t.task.task_id)
                .ok_or_else(|| EvalError::MissingGold(t.task.task_id.clone()))?;
            let predicted = match (&t.final_answer, t.termination) {
                (Some(a), Termination::Finished) => dedup_normalized(a),
                _ => Vec::new(),
            };
            Ok(EvalRecord {
                task_id: t.task.task_id.clone(),
                group: t.task.group.as_str().to_string(),
                f1: score_sample(&predicted, g)?,
                predicted,
                gold: dedup_normalized(g),
                termination: t.termination,
            })
        })
        .collect()
}
