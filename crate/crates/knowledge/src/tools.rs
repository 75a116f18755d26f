use std::sync::Arc;

use clinseek_core::names;
use clinseek_core::{Arguments, ErrorCode, ParamType, ToolFailure, ToolOutput, ToolParam, ToolSchema};
use serde::Serialize;
use serde_json::Value as Json;

use crate::backend::{KnowledgeBackend, KnowledgeError, SearchHit, MAX_SEARCH_K};
use crate::text::{folded, match_offsets};

pub const PAGE_CHARS: usize = 4_000;
pub const MAX_FIND_MATCHES: usize = 20;
pub const CONTEXT_CHARS: usize = 120;
const DEFAULT_K: usize = 5;

/// `k` above the maximum is clamped; zero is rejected.
pub fn search(
    backend: &dyn KnowledgeBackend,
    query: &str,
    k: usize,
) -> Result<Vec<SearchHit>, KnowledgeError> {
    if query.trim().is_empty() {
        return Err(KnowledgeError::EmptyQuery);
    }
    if k == 0 {
        return Err(KnowledgeError::InvalidArguments("k must be positive".into()));
    }
    backend.search(query, k.min(MAX_SEARCH_K))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Page {
    pub doc_id: String,
    pub title: String,
    pub url: String,
    pub page: usize,
    pub total_pages: usize,
    pub text: String,
}

impl Page {
    pub fn render(&self) -> String {
        format!(
            "[{}] {}\n{}\npage {} of {}\n\n{}",
            self.doc_id, self.title, self.url, self.page, self.total_pages, self.text
        )
    }
}

/// One 1-based page of the document body.
pub fn open(backend: &dyn KnowledgeBackend, id: &str, page: usize) -> Result<Page, KnowledgeError> {
    let doc = backend.fetch(id)?;
    let chars: Vec<char> = doc.body.chars().collect();
    let total_pages = chars.len().div_ceil(PAGE_CHARS).max(1);
    if page == 0 || page > total_pages {
        return Err(KnowledgeError::InvalidArguments(format!(
            "page {page} out of range 1..={total_pages}"
        )));
    }
    let start = (page - 1) * PAGE_CHARS;
    let end = (start + PAGE_CHARS).min(chars.len());
    Ok(Page {
        doc_id: doc.doc_id,
        title: doc.title,
        url: doc.url,
        page,
        total_pages,
        text: chars[start..end].iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindMatch {
    /// Char offset into the body.
    pub offset: usize,
    pub context: String,
}

/// Case-insensitive occurrences of `term`, at most [`MAX_FIND_MATCHES`].
pub fn find(
    backend: &dyn KnowledgeBackend,
    id: &str,
    term: &str,
) -> Result<Vec<FindMatch>, KnowledgeError> {
    if term.is_empty() {
        return Err(KnowledgeError::EmptyQuery);
    }
    let doc = backend.fetch(id)?;
    let chars: Vec<char> = doc.body.chars().collect();
    let hay = folded(&doc.body);
    let needle = folded(term);
    Ok(match_offsets(&hay, &needle)
        .take(MAX_FIND_MATCHES)
        .map(|offset| {
            let from = offset.saturating_sub(CONTEXT_CHARS);
            let to = (offset + needle.len() + CONTEXT_CHARS).min(chars.len());
            FindMatch {
                offset,
                context: chars[from..to].iter().collect(),
            }
        })
        .collect())
}

fn render_hits(hits: &[SearchHit]) -> String {
    if hits.is_empty() {
        return "no results\n".to_string();
    }
    hits.iter()
        .map(|h| format!("{}. [{}] {}\n   {}\n", h.rank, h.doc_id, h.title, h.snippet.replace('\n', " ")))
        .collect()
}

fn render_matches(id: &str, term: &str, matches: &[FindMatch]) -> String {
    let mut out = format!("{} match(es) for {term:?} in {id}\n", matches.len());
    for m in matches {
        out.push_str(&format!("- offset {}: {}\n", m.offset, m.context.replace('\n', " ")));
    }
    out
}

/// Dispatches the browser tools for one episode.
#[derive(Clone)]
pub struct KnowledgeTools {
    backend: Arc<dyn KnowledgeBackend>,
}

impl KnowledgeTools {
    pub fn new(backend: Arc<dyn KnowledgeBackend>) -> Self {
        Self { backend }
    }

    pub fn backend(&self) -> &dyn KnowledgeBackend {
        self.backend.as_ref()
    }

    pub fn call(&self, name: &str, args: &Arguments) -> ToolOutput {
        let schema = tool_schemas()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ToolFailure::new(ErrorCode::UnknownTool, format!("unknown tool {name}")))?;
        schema
            .check_arguments(args)
            .map_err(|m| ToolFailure::new(ErrorCode::InvalidArguments, m))?;
        let b = self.backend.as_ref();
        match name {
            names::BROWSER_SEARCH => {
                let k = int(args, "k")?.unwrap_or(DEFAULT_K);
                Ok(render_hits(&search(b, &string(args, "query"), k)?))
            }
            names::BROWSER_OPEN => {
                let page = int(args, "page")?.unwrap_or(1);
                Ok(open(b, &string(args, "doc_id"), page)?.render())
            }
            names::BROWSER_FIND => {
                let id = string(args, "doc_id");
                let term = string(args, "term");
                Ok(render_matches(&id, &term, &find(b, &id, &term)?))
            }
            _ => unreachable!("schema lookup succeeded for {name}"),
        }
    }
}

fn string(args: &Arguments, key: &str) -> String {
    args.get(key).and_then(Json::as_str).unwrap_or_default().to_string()
}

fn int(args: &Arguments, key: &str) -> Result<Option<usize>, ToolFailure> {
    match args.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(v) => v.as_u64().map(|n| Some(n as usize)).ok_or_else(|| {
            ToolFailure::new(ErrorCode::InvalidArguments, format!("{key} must be a non-negative integer"))
        }),
    }
}

pub fn tool_schemas() -> Vec<ToolSchema> {
    use ParamType::*;
    vec![
        ToolSchema::new(
            names::BROWSER_SEARCH,
            "Search external medical knowledge sources.",
            vec![
                ToolParam::required("query", String, "Search terms."),
                ToolParam::optional("k", Integer, "Number of results (default 5, at most 10)."),
            ],
        ),
        ToolSchema::new(
            names::BROWSER_OPEN,
            "Open and inspect a retrieved page, 4000 characters per page.",
            vec![
                ToolParam::required("doc_id", String, "doc_id or URL from a search result."),
                ToolParam::optional("page", Integer, "1-based page number (default 1)."),
            ],
        ),
        ToolSchema::new(
            names::BROWSER_FIND,
            "Find exact terms or passages in a document (case-insensitive).",
            vec![
                ToolParam::required("doc_id", String, "doc_id or URL."),
                ToolParam::required("term", String, "Text to find."),
            ],
        ),
    ]
}
