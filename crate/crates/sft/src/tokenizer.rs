use regex::Regex;

use crate::error::SftError;
use crate::render::Message;

/// Tokens charged per message for role and separator markup.
pub const MESSAGE_OVERHEAD: usize = 4;

/// Counts tokens. Exact model tokenizers plug in through this trait.
pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &str;

    fn count(&self, text: &str) -> usize;
}

/// Approximate tokenizer: every run of word characters is one token and
/// every other non-space character is one token. Not a model tokenizer.
#[derive(Debug, Clone)]
pub struct ApproxTokenizer {
    re: Regex,
}

impl Default for ApproxTokenizer {
    fn default() -> Self {
        Self {
            re: Regex::new(r"\w+|[^\w\s]").expect("valid pattern"),
        }
    }
}

impl Tokenizer for ApproxTokenizer {
    fn name(&self) -> &str {
        "approx"
    }

    fn count(&self, text: &str) -> usize {
        self.re.find_iter(text).count()
    }
}

/// One token per whitespace-separated word.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

pub fn tokenizer_by_name(name: &str) -> Result<Box<dyn Tokenizer>, SftError> {
    match name {
        "approx" => Ok(Box::new(ApproxTokenizer::default())),
        "whitespace" => Ok(Box::new(WhitespaceTokenizer)),
        other => Err(SftError::UnknownTokenizer(other.to_string())),
    }
}

pub fn count_messages(tokenizer: &dyn Tokenizer, messages: &[Message]) -> usize {
    messages
        .iter()
        .map(|m| tokenizer.count(&m.content) + MESSAGE_OVERHEAD)
        .sum()
}
