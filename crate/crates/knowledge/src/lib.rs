//! Knowledge lookup for agents: `browser.search`, `browser.open` and
//! `browser.find` over a [`KnowledgeBackend`].
//!
//! The default backend is a [`CachedCorpus`] read from a directory, which
//! makes every result reproducible offline. [`HttpBackend`] adapts a remote
//! search service and is only used when configured.

mod backend;
mod corpus;
mod http;
mod text;
mod tools;

pub use backend::{KnowledgeBackend, KnowledgeDoc, KnowledgeError, SearchHit, MAX_SEARCH_K, SNIPPET_CHARS};
pub use corpus::{write_sample_corpus, CachedCorpus, IndexEntry, INDEX_FILE};
pub use http::HttpBackend;
pub use tools::{
    find, open, search, tool_schemas, FindMatch, KnowledgeTools, Page, CONTEXT_CHARS, MAX_FIND_MATCHES,
    PAGE_CHARS,
};
