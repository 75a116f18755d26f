use std::sync::Mutex;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Deserialize;

use crate::backend::{KnowledgeBackend, KnowledgeDoc, KnowledgeError, SearchHit, SNIPPET_CHARS};

/// Adapter for a remote search service.
///
/// Expects `GET {base}/search?q=..&k=..` to return a JSON array of
/// `{doc_id, title, snippet}` and `GET {base}/doc?id=..` to return a
/// [`KnowledgeDoc`]. Requests through one instance are serialized and spaced
/// at least `min_interval` apart.
pub struct HttpBackend {
    base: String,
    client: Client,
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

#[derive(Deserialize)]
struct RemoteHit {
    doc_id: String,
    title: String,
    #[serde(default)]
    snippet: String,
}

impl HttpBackend {
    pub fn new(base: &str, timeout: Duration, min_interval: Duration) -> Result<Self, KnowledgeError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| KnowledgeError::BackendUnavailable(error_chain(&e)))?;
        Ok(Self {
            base: base.trim_end_matches('/').to_string(),
            client,
            min_interval,
            last: Mutex::new(None),
        })
    }

    fn get<T: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        query: &[(&str, String)],
        missing: impl FnOnce() -> KnowledgeError,
    ) -> Result<T, KnowledgeError> {
        let mut last = self.last.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(prev) = *last {
            let wait = self.min_interval.saturating_sub(prev.elapsed());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        let result = self
            .client
            .get(format!("{}{path}", self.base))
            .query(query)
            .send();
        *last = Some(Instant::now());
        let unavailable = |e: reqwest::Error| KnowledgeError::BackendUnavailable(error_chain(&e));
        let resp = result.map_err(unavailable)?;
        match resp.status() {
            StatusCode::NOT_FOUND => Err(missing()),
            s if s.is_success() => resp.json().map_err(unavailable),
            s => Err(KnowledgeError::BackendUnavailable(format!("HTTP {s}"))),
        }
    }
}

fn error_chain(e: &dyn std::error::Error) -> String {
    let mut out = e.to_string();
    let mut source = e.source();
    while let Some(s) = source {
        out.push_str(": ");
        out.push_str(&s.to_string());
        source = s.source();
    }
    out
}

impl KnowledgeBackend for HttpBackend {
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, KnowledgeError> {
        let hits: Vec<RemoteHit> = self.get(
            "/search",
            &[("q", query.to_string()), ("k", k.to_string())],
            || KnowledgeError::BackendUnavailable("search endpoint not found".into()),
        )?;
        Ok(hits
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, h)| SearchHit {
                doc_id: h.doc_id,
                title: h.title,
                snippet: h.snippet.chars().take(SNIPPET_CHARS).collect(),
                rank: i + 1,
            })
            .collect())
    }

    fn fetch(&self, id: &str) -> Result<KnowledgeDoc, KnowledgeError> {
        self.get("/doc", &[("id", id.to_string())], || {
            KnowledgeError::NotFound(id.to_string())
        })
    }
}
