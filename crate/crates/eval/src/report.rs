use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::EvalError;
use crate::score::EvalRecord;
use crate::stats::{aggregate, CIEstimate};

pub const OVERALL: &str = "overall";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub groups: BTreeMap<String, CIEstimate>,
    pub overall: CIEstimate,
    /// Episodes per termination kind.
    pub terminations: BTreeMap<String, usize>,
}

impl EvalReport {
    pub fn from_records(records: &[EvalRecord]) -> Result<Self, EvalError> {
        let agg = aggregate(records)?;
        let mut terminations = BTreeMap::new();
        for r in records {
            *terminations.entry(r.termination.as_str().to_string()).or_insert(0) += 1;
        }
        Ok(Self {
            groups: agg.groups,
            overall: agg.overall,
            terminations,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_string(self).expect("report serializes")))
    }

    pub fn render_table(&self) -> String {
        let mut rows: Vec<[String; 3]> = self
            .groups
            .iter()
            .map(|(g, ci)| [g.clone(), ci.n.to_string(), format_ci(ci)])
            .collect();
        rows.push([OVERALL.to_string(), self.overall.n.to_string(), format_ci(&self.overall)]);
        render_rows(&["group", "n", "F1 (95% CI)"], &rows)
    }
}

/// `mean ± radius` with one decimal for the mean and two for the radius.
pub fn format_ci(ci: &CIEstimate) -> String {
    match ci.radius {
        Some(r) => format!("{:.1} ± {:.2}", ci.mean, r),
        None => format!("{:.1}", ci.mean),
    }
}

pub(crate) fn render_rows<const N: usize>(headers: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                let pad = w - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(headers.to_vec(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(rule.iter().map(String::as_str).collect(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}
