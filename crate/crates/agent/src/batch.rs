use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clinseek_core::{TaskInstance, Trajectory};
use serde::Serialize;

use crate::budget::RuntimeBudget;
use crate::policy::Policy;
use crate::registry::Registry;
use crate::runtime::run_episode_with;

/// One episode to run: a task plus, for the curated setting, its context.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub task: TaskInstance,
    pub curated_context: Option<String>,
}

impl EpisodeSpec {
    pub fn agentic(task: TaskInstance) -> Self {
        Self { task, curated_context: None }
    }

    pub fn curated(task: TaskInstance, context: String) -> Self {
        Self { task, curated_context: Some(context) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProgressEvent {
    EpisodeStart {
        index: usize,
        task_id: String,
    },
    EpisodeEnd {
        index: usize,
        task_id: String,
        termination: String,
        steps: usize,
        wall_time_ms: u64,
    },
}

impl ProgressEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("progress events serialize")
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    /// In input order.
    pub trajectories: Vec<Trajectory>,
    /// Largest number of episodes observed in flight at once.
    pub peak_in_flight: usize,
    pub wall_time_ms: u64,
}

/// Runs every spec exactly once with at most `parallelism` episodes in
/// flight. Each episode gets a fresh registry from `registry_for`.
pub fn run_batch(
    specs: &[EpisodeSpec],
    policy: &dyn Policy,
    registry_for: &(dyn Fn(&EpisodeSpec) -> Registry + Sync),
    budget: &RuntimeBudget,
    parallelism: usize,
    on_event: &(dyn Fn(&ProgressEvent) + Sync),
) -> BatchResult {
    let start = Instant::now();
    let workers = parallelism.max(1).min(specs.len());
    let next = AtomicUsize::new(0);
    let in_flight = AtomicUsize::new(0);
    let peak = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Trajectory>>> = Mutex::new(vec![None; specs.len()]);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(spec) = specs.get(i) else { break };
                let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                on_event(&ProgressEvent::EpisodeStart { index: i, task_id: spec.task.task_id.clone() });
                let mut registry = registry_for(spec);
                let t = run_episode_with(&spec.task, policy, &mut registry, budget, spec.curated_context.as_deref());
                in_flight.fetch_sub(1, Ordering::SeqCst);
                on_event(&ProgressEvent::EpisodeEnd {
                    index: i,
                    task_id: spec.task.task_id.clone(),
                    termination: t.termination.as_str().to_string(),
                    steps: t.steps.len(),
                    wall_time_ms: t.wall_time_ms,
                });
                slots.lock().expect("result slots")[i] = Some(t);
            });
        }
    });

    let trajectories = slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|t| t.expect("every spec ran"))
        .collect();
    BatchResult {
        trajectories,
        peak_in_flight: peak.into_inner(),
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}
