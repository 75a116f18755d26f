use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::task::TaskInstance;
use crate::tool::{names, Observation, ObservationStatus, ToolCall, DEFAULT_MAX_TOOL_RESULT_CHARS};

pub const DEFAULT_MAX_ROUNDS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Finished,
    RoundBudgetExhausted,
    PolicyError,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Finished => "finished",
            Termination::RoundBudgetExhausted => "round_budget_exhausted",
            Termination::PolicyError => "policy_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub call: ToolCall,
    pub observation: Observation,
}

/// A complete episode: the task, every (call, observation) pair in order,
/// and the submitted answer if the policy finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task: TaskInstance,
    pub steps: Vec<Step>,
    pub final_answer: Option<Vec<String>>,
    pub termination: Termination,
    pub policy_id: String,
    pub wall_time_ms: u64,
}

impl Trajectory {
    pub fn is_finished(&self) -> bool {
        self.termination == Termination::Finished
    }

    pub fn calls(&self) -> impl Iterator<Item = &ToolCall> {
        self.steps.iter().map(|s| &s.call)
    }

    /// Copy with every wall-clock field zeroed, for byte comparisons.
    pub fn without_timing(&self) -> Trajectory {
        let mut t = self.clone();
        t.wall_time_ms = 0;
        for s in &mut t.steps {
            s.observation.latency_ms = 0;
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationLimits {
    pub max_rounds: usize,
    pub max_tool_result_chars: usize,
}

impl Default for ValidationLimits {
    fn default() -> Self {
        Self {
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_tool_result_chars: DEFAULT_MAX_TOOL_RESULT_CHARS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub step_index: Option<u32>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step_index {
            Some(k) => write!(f, "[{}] step {}: {}", self.invariant, k, self.message),
            None => write!(f, "[{}] {}", self.invariant, self.message),
        }
    }
}

/// Checks a trajectory against the default budgets.
pub fn validate_trajectory(t: &Trajectory) -> Vec<Violation> {
    validate_trajectory_with(t, &ValidationLimits::default())
}

pub fn validate_trajectory_with(t: &Trajectory, limits: &ValidationLimits) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut prev: Option<u32> = None;
    for step in &t.steps {
        let k = step.call.step_index;
        let monotone = match prev {
            None => k >= 1,
            Some(p) => k > p,
        };
        if !monotone {
            out.push(Violation {
                invariant: "step_index_increasing",
                step_index: Some(k),
                message: format!(
                    "step index {} does not increase on {}",
                    k,
                    prev.map_or("start (must be >= 1)".to_string(), |p| p.to_string())
                ),
            });
        }
        prev = Some(k);
        if step.observation.step_index != k {
            out.push(Violation {
                invariant: "observation_matches_call",
                step_index: Some(k),
                message: format!("observation carries step index {}", step.observation.step_index),
            });
        }
        let chars = step.observation.content.chars().count();
        if chars > limits.max_tool_result_chars {
            out.push(Violation {
                invariant: "observation_within_limit",
                step_index: Some(k),
                message: format!(
                    "content has {} chars, limit {}",
                    chars, limits.max_tool_result_chars
                ),
            });
        }
        if step.observation.truncated && chars != limits.max_tool_result_chars {
            out.push(Violation {
                invariant: "truncation_flag",
                step_index: Some(k),
                message: format!("truncated content has {} chars, expected the limit", chars),
            });
        }
    }

    if t.steps.len() > limits.max_rounds {
        out.push(Violation {
            invariant: "round_budget",
            step_index: None,
            message: format!("{} steps exceed budget {}", t.steps.len(), limits.max_rounds),
        });
    }

    let ends_with_finish = t.steps.last().is_some_and(|s| {
        s.call.name == names::FINISH && s.observation.status == ObservationStatus::Ok
    });
    let finished = t.termination == Termination::Finished;
    if finished != ends_with_finish {
        out.push(Violation {
            invariant: "finished_iff_finish_call",
            step_index: t.steps.last().map(|s| s.call.step_index),
            message: format!(
                "termination is {} but last step {} a successful {}",
                t.termination.as_str(),
                if ends_with_finish { "is" } else { "is not" },
                names::FINISH
            ),
        });
    }
    if finished != t.final_answer.is_some() {
        out.push(Violation {
            invariant: "final_answer_iff_finished",
            step_index: None,
            message: format!(
                "termination is {} but final_answer is {}",
                t.termination.as_str(),
                if t.final_answer.is_some() { "present" } else { "absent" }
            ),
        });
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid trajectory record: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Reads one trajectory per line. Blank lines are skipped.
pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>, TrajectoryIoError> {
    let io_err = |source| TrajectoryIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(&line).map_err(|source| TrajectoryIoError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(t);
    }
    Ok(out)
}

pub fn write_trajectories(path: &Path, trajectories: &[Trajectory]) -> Result<(), TrajectoryIoError> {
    let io_err = |source| TrajectoryIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for t in trajectories {
        let line = serde_json::to_string(t).expect("trajectory serializes");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
