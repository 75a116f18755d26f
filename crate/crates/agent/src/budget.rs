use std::time::Duration;

use clinseek_core::{DEFAULT_MAX_ROUNDS, DEFAULT_MAX_TOOL_RESULT_CHARS};

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 8192;
pub const DEFAULT_CONCURRENCY: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeBudget {
    pub max_rounds: usize,
    pub max_tool_result_chars: usize,
    pub max_output_tokens_hint: u32,
    /// `None` means unlimited.
    pub episode_wall_clock_limit: Option<Duration>,
    pub max_concurrent_episodes: usize,
}

impl Default for RuntimeBudget {
    fn default() -> Self {
        Self {
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_tool_result_chars: DEFAULT_MAX_TOOL_RESULT_CHARS,
            max_output_tokens_hint: DEFAULT_MAX_OUTPUT_TOKENS,
            episode_wall_clock_limit: None,
            max_concurrent_episodes: DEFAULT_CONCURRENCY,
        }
    }
}

impl RuntimeBudget {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("max_rounds", self.max_rounds),
            ("max_tool_result_chars", self.max_tool_result_chars),
            ("max_output_tokens_hint", self.max_output_tokens_hint as usize),
            ("max_concurrent_episodes", self.max_concurrent_episodes),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.episode_wall_clock_limit == Some(Duration::ZERO) {
            return Err("episode_wall_clock_limit must be positive".into());
        }
        Ok(())
    }
}
