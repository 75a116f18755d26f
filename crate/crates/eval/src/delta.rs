use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::report::{format_ci, render_rows, EvalReport, OVERALL};
use crate::stats::CIEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

impl Sign {
    fn of(delta: f64) -> Self {
        if delta > 0.0 {
            Sign::Positive
        } else if delta < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub group: String,
    pub agentic: CIEstimate,
    pub curated: CIEstimate,
    /// Agentic mean minus curated mean.
    pub delta: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    /// One row per group, then the overall row.
    pub rows: Vec<DeltaRow>,
}

fn row(group: &str, agentic: CIEstimate, curated: CIEstimate) -> DeltaRow {
    let delta = agentic.mean - curated.mean;
    DeltaRow {
        group: group.to_string(),
        agentic,
        curated,
        delta,
        sign: Sign::of(delta),
    }
}

pub fn delta_report(agentic: &EvalReport, curated: &EvalReport) -> Result<DeltaReport, EvalError> {
    let only = |a: &EvalReport, b: &EvalReport| -> Vec<String> {
        a.groups.keys().filter(|k| !b.groups.contains_key(*k)).cloned().collect()
    };
    let (only_agentic, only_curated) = (only(agentic, curated), only(curated, agentic));
    if !only_agentic.is_empty() || !only_curated.is_empty() {
        return Err(EvalError::GroupMismatch { only_agentic, only_curated });
    }
    let mut rows: Vec<DeltaRow> = agentic
        .groups
        .iter()
        .map(|(g, a)| row(g, *a, curated.groups[g]))
        .collect();
    rows.push(row(OVERALL, agentic.overall, curated.overall));
    Ok(DeltaReport { rows })
}

impl DeltaReport {
    pub fn overall(&self) -> &DeltaRow {
        self.rows.last().expect("overall row present")
    }

    /// Aligned table; deltas carry an explicit sign.
    pub fn render_table(&self) -> String {
        let rows: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.group.clone(),
                    format_ci(&r.curated),
                    format_ci(&r.agentic),
                    format!("{:+.1}", r.delta),
                ]
            })
            .collect();
        render_rows(&["group", "curated input", "evidence seeking", "delta"], &rows)
    }
}
