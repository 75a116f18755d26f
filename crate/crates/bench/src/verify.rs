use clinseek_core::Timestamp;
use clinseek_ehr::{ColumnType, EhrSnapshot, EhrStore, TableKind};
use serde::Serialize;

use crate::curated::{ContextEvent, PairedExample};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    /// One line per offending event or row.
    pub offending: Vec<String>,
}

impl CheckResult {
    fn from(offending: Vec<String>) -> Self {
        Self {
            passed: offending.is_empty(),
            offending,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairingReport {
    pub task_id: String,
    /// Every curated context event exists in the snapshot at the cutoff.
    pub context_retrievable: CheckResult,
    /// No snapshot cell postdates the cutoff.
    pub nothing_after_cutoff: CheckResult,
}

impl PairingReport {
    pub fn passed(&self) -> bool {
        self.context_retrievable.passed && self.nothing_after_cutoff.passed
    }
}

fn locate(snap: &EhrSnapshot, event: &ContextEvent) -> bool {
    snap.event_tables()
        .filter(|t| event.table.as_ref().map_or(true, |name| &t.spec.name == name))
        .any(|t| {
            let keys: Option<Vec<(usize, &String)>> = event
                .key
                .iter()
                .map(|(col, v)| t.spec.column_index(col).map(|i| (i, v)))
                .collect();
            let Some(keys) = keys else { return false };
            t.rows.iter().any(|row| {
                t.row_time(row) == Some(event.time)
                    && keys.iter().all(|(i, v)| !row[*i].is_null() && row[*i].to_string() == **v)
            })
        })
}

fn late_cells(snap: &EhrSnapshot, cutoff: Timestamp) -> Vec<String> {
    let mut out = Vec::new();
    for t in snap.tables().filter(|t| t.kind() == TableKind::EventTable) {
        let ts_cols: Vec<usize> = t
            .spec
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.ty == ColumnType::Timestamp)
            .map(|(i, _)| i)
            .collect();
        for (r, row) in t.rows.iter().enumerate() {
            for &i in &ts_cols {
                if let Some(ts) = row[i].as_timestamp().filter(|ts| *ts > cutoff) {
                    out.push(format!("{} row {} column {}: {ts}", t.spec.name, r + 1, t.spec.columns[i].name));
                }
            }
        }
    }
    out
}

/// Checks one pair against the store. Failures are reported, not raised.
pub fn verify_pairing(pair: &PairedExample, store: &EhrStore) -> PairingReport {
    let task = &pair.agentic;
    let snap = match store.snapshot(&task.patient_id, task.cutoff) {
        Ok(s) => s,
        Err(e) => {
            let failed = CheckResult::from(vec![format!("snapshot failed: {e}")]);
            return PairingReport {
                task_id: task.task_id.clone(),
                context_retrievable: failed.clone(),
                nothing_after_cutoff: failed,
            };
        }
    };
    let missing = pair
        .curated
        .context_events
        .iter()
        .enumerate()
        .filter(|(_, e)| !locate(&snap, e))
        .map(|(i, e)| format!("event {} at {}: {}", i + 1, e.time, e.text))
        .collect();
    PairingReport {
        task_id: task.task_id.clone(),
        context_retrievable: CheckResult::from(missing),
        nothing_after_cutoff: CheckResult::from(late_cells(&snap, task.cutoff)),
    }
}
