use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use clinseek_core::{Termination, Trajectory};
use clinseek_eval::score_sample;
use serde::{Deserialize, Serialize};

use crate::error::SftError;
use crate::render::{render, SftSample};
use crate::tokenizer::{count_messages, Tokenizer};

pub const DEFAULT_MAX_TOKENS: usize = 52_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportStats {
    /// Finished trajectories rendered.
    pub rendered: usize,
    pub kept: usize,
    /// Rendered samples over the token limit.
    pub dropped: usize,
    /// `dropped / rendered`, 0 when nothing was rendered.
    pub drop_fraction: f64,
    pub skipped_unfinished: usize,
    pub skipped_incorrect: usize,
    pub tokenizer: String,
    pub max_tokens: usize,
}

#[derive(Debug, Clone)]
pub struct ExportOptions<'a> {
    pub max_tokens: usize,
    /// When set, only trajectories scoring F1 = 100 against these labels.
    pub correct_only: Option<&'a HashMap<String, Vec<String>>>,
}

impl Default for ExportOptions<'_> {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            correct_only: None,
        }
    }
}

/// Renders every finished trajectory and keeps samples of at most
/// `max_tokens` tokens (the limit is inclusive).
pub fn build_samples(
    trajectories: &[Trajectory],
    tokenizer: &dyn Tokenizer,
    options: &ExportOptions<'_>,
) -> (Vec<SftSample>, ExportStats) {
    let mut stats = ExportStats {
        tokenizer: tokenizer.name().to_string(),
        max_tokens: options.max_tokens,
        ..ExportStats::default()
    };
    let mut samples = Vec::new();
    for t in trajectories {
        if t.termination != Termination::Finished {
            stats.skipped_unfinished += 1;
            continue;
        }
        if let Some(gold) = options.correct_only {
            let answer = t.final_answer.as_deref().unwrap_or_default();
            let correct = gold
                .get(&t.task.task_id)
                .and_then(|g| score_sample(answer, g).ok())
                .is_some_and(|f1| f1 == 100.0);
            if !correct {
                stats.skipped_incorrect += 1;
                continue;
            }
        }
        let messages = render(t).expect("finished trajectories render");
        let token_count = count_messages(tokenizer, &messages);
        let kept = token_count <= options.max_tokens;
        stats.rendered += 1;
        if kept {
            stats.kept += 1;
        } else {
            stats.dropped += 1;
        }
        samples.push(SftSample {
            task_id: t.task.task_id.clone(),
            messages,
            token_count,
            kept,
        });
    }
    if stats.rendered > 0 {
        stats.drop_fraction = stats.dropped as f64 / stats.rendered as f64;
    }
    (samples, stats)
}

/// Writes kept samples as line-delimited JSON and returns the stats.
pub fn export_dataset(
    trajectories: &[Trajectory],
    tokenizer: &dyn Tokenizer,
    options: &ExportOptions<'_>,
    out: &Path,
) -> Result<ExportStats, SftError> {
    let (samples, stats) = build_samples(trajectories, tokenizer, options);
    let io = |e: std::io::Error| SftError::Io { path: out.display().to_string(), message: e.to_string() };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut w = BufWriter::new(std::fs::File::create(out).map_err(io)?);
    for s in samples.iter().filter(|s| s.kept) {
        writeln!(w, "{}", serde_json::to_string(s).expect("samples serialize")).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(stats)
}
