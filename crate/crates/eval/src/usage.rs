use std::collections::BTreeMap;

use clinseek_core::Trajectory;
use serde::{Deserialize, Serialize};

use crate::report::render_rows;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolCount {
    pub count: u64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToolUsageReport {
    pub total: u64,
    pub tools: BTreeMap<String, ToolCount>,
}

impl ToolUsageReport {
    pub fn from_counts(counts: &BTreeMap<String, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let tools = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(name, &count)| {
                (
                    name.clone(),
                    ToolCount {
                        count,
                        share: count as f64 / total as f64,
                    },
                )
            })
            .collect();
        Self { total, tools }
    }

    pub fn share(&self, tool: &str) -> f64 {
        self.tools.get(tool).map_or(0.0, |t| t.share)
    }

    /// Rows by descending count, shares in percent with one decimal.
    pub fn render_table(&self) -> String {
        let mut entries: Vec<(&String, &ToolCount)> = self.tools.iter().collect();
        entries.sort_by(|a, b| b.1.count.cmp(&a.1.count).then(a.0.cmp(b.0)));
        let mut rows: Vec<[String; 3]> = entries
            .into_iter()
            .map(|(n, c)| [n.clone(), c.count.to_string(), format!("{:.1}%", 100.0 * c.share)])
            .collect();
        rows.push(["total".into(), self.total.to_string(), String::new()]);
        render_rows(&["tool", "calls", "share"], &rows)
    }
}

/// Counts every recorded call by tool name.
pub fn tool_usage(trajectories: &[Trajectory]) -> ToolUsageReport {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for call in trajectories.iter().flat_map(|t| t.calls()) {
        *counts.entry(call.name.clone()).or_insert(0) += 1;
    }
    ToolUsageReport::from_counts(&counts)
}
