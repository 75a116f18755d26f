//! Supervised fine-tuning data from finished trajectories.
//!
//! [`render`] writes each trajectory as chat messages in the native
//! tool-call format: calls inside `<tool_call>` blocks, observations inside
//! `<tool_response>` blocks. [`parse`] inverts it. [`export_dataset`]
//! applies the token limit.

mod error;
mod export;
mod render;
mod tokenizer;

pub use error::SftError;
pub use export::{build_samples, export_dataset, ExportOptions, ExportStats, DEFAULT_MAX_TOKENS};
pub use render::{
    escape_text, parse, render, system_message, unescape_text, Message, ParsedStep, Role, SftSample, TOOL_CALL_CLOSE,
    TOOL_CALL_OPEN, TOOL_RESPONSE_CLOSE, TOOL_RESPONSE_OPEN,
};
pub use tokenizer::{
    count_messages, tokenizer_by_name, ApproxTokenizer, Tokenizer, WhitespaceTokenizer, MESSAGE_OVERHEAD,
};
