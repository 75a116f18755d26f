use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{KnowledgeBackend, KnowledgeDoc, KnowledgeError, SearchHit, SNIPPET_CHARS};
use crate::text::{folded, match_offsets};

pub const INDEX_FILE: &str = "index.json";

/// One `index.json` entry; the map key is the doc_id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub title: String,
    pub url: String,
    #[serde(default)]
    pub fetched_at: String,
}

/// An immutable in-memory corpus ranked by query-term overlap.
#[derive(Debug, Clone)]
pub struct CachedCorpus {
    docs: BTreeMap<String, KnowledgeDoc>,
    terms: HashMap<String, BTreeSet<String>>,
}

pub(crate) fn terms(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl CachedCorpus {
    pub fn from_docs(docs: impl IntoIterator<Item = KnowledgeDoc>) -> Result<Self, KnowledgeError> {
        let mut map = BTreeMap::new();
        for d in docs {
            if map.contains_key(&d.doc_id) {
                return Err(KnowledgeError::InvalidArguments(format!(
                    "duplicate doc_id {:?}",
                    d.doc_id
                )));
            }
            map.insert(d.doc_id.clone(), d);
        }
        let terms = map
            .values()
            .map(|d| {
                let set = terms(&d.title).chain(terms(&d.body)).collect();
                (d.doc_id.clone(), set)
            })
            .collect();
        Ok(Self { docs: map, terms })
    }

    /// Reads `index.json` and the document files it names.
    pub fn open(dir: &Path) -> Result<Self, KnowledgeError> {
        let unavailable = |what: String| KnowledgeError::BackendUnavailable(what);
        let index_path = dir.join(INDEX_FILE);
        let raw = std::fs::read_to_string(&index_path)
            .map_err(|e| unavailable(format!("{}: {e}", index_path.display())))?;
        let index: BTreeMap<String, IndexEntry> = serde_json::from_str(&raw)
            .map_err(|e| unavailable(format!("{}: {e}", index_path.display())))?;
        let mut docs = Vec::with_capacity(index.len());
        for (doc_id, entry) in index {
            let path = dir.join(&entry.file);
            let body = std::fs::read_to_string(&path)
                .map_err(|e| unavailable(format!("{}: {e}", path.display())))?;
            docs.push(KnowledgeDoc {
                doc_id,
                title: entry.title,
                url: entry.url,
                body,
                fetched_at: entry.fetched_at,
            });
        }
        Self::from_docs(docs)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> impl Iterator<Item = &KnowledgeDoc> {
        self.docs.values()
    }
}

/// Window around the first body occurrence of the matched term that occurs
/// most often in the body (ties by query order).
fn snippet(body: &str, matched: &[String]) -> String {
    let body_terms: Vec<String> = terms(body).collect();
    let mut best: Option<(&String, usize)> = None;
    for t in matched {
        let n = body_terms.iter().filter(|b| *b == t).count();
        if n > 0 && best.map_or(true, |(_, m)| n > m) {
            best = Some((t, n));
        }
    }
    let start = best
        .and_then(|(t, _)| match_offsets(&folded(body), &folded(t)).next())
        .unwrap_or(0);
    let from = start.saturating_sub(SNIPPET_CHARS / 3);
    body.chars().skip(from).take(SNIPPET_CHARS).collect()
}

impl KnowledgeBackend for CachedCorpus {
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, KnowledgeError> {
        let mut query_terms: Vec<String> = Vec::new();
        for t in terms(query) {
            if !query_terms.contains(&t) {
                query_terms.push(t);
            }
        }
        if query_terms.is_empty() {
            return Err(KnowledgeError::EmptyQuery);
        }
        let mut scored: Vec<(usize, &KnowledgeDoc, Vec<String>)> = self
            .docs
            .values()
            .filter_map(|d| {
                let set = &self.terms[&d.doc_id];
                let matched: Vec<String> =
                    query_terms.iter().filter(|t| set.contains(*t)).cloned().collect();
                (!matched.is_empty()).then_some((matched.len(), d, matched))
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.doc_id.cmp(&b.1.doc_id)));
        Ok(scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (_, d, matched))| SearchHit {
                doc_id: d.doc_id.clone(),
                title: d.title.clone(),
                snippet: snippet(&d.body, &matched),
                rank: i + 1,
            })
            .collect())
    }

    fn fetch(&self, id: &str) -> Result<KnowledgeDoc, KnowledgeError> {
        self.docs
            .get(id)
            .or_else(|| self.docs.values().find(|d| d.url == id))
            .cloned()
            .ok_or_else(|| KnowledgeError::NotFound(id.to_string()))
    }
}

const SAMPLE_DOCS: &[(&str, &str, &str, &str)] = &[
    (
        "phenotype-benchmark",
        "Multitask clinical benchmarks and phenotype taxonomy",
        "https://example.org/kb/phenotype-benchmark",
        "Harutyunyan and colleagues proposed a multitask benchmark on intensive care data. \
The phenotype taxonomy groups ICD codes into 25 acute and chronic conditions such as sepsis, \
acute renal failure and congestive heart failure. Phenotyping is framed as multi-label \
classification over the stay.",
    ),
    (
        "sepsis-bundle",
        "Sepsis recognition and early antibiotic therapy",
        "https://example.org/kb/sepsis-bundle",
        "Sepsis is life-threatening organ dysfunction caused by a dysregulated host response to \
infection. Blood cultures should be drawn before broad-spectrum antibiotics such as \
piperacillin-tazobactam or meropenem. Lactate above 2 mmol/L warrants repeat measurement.",
    ),
    (
        "troponin-mi",
        "Troponin interpretation in suspected myocardial infarction",
        "https://example.org/kb/troponin-mi",
        "A rise and fall of cardiac troponin with at least one value above the 99th percentile \
indicates myocardial injury. Non-ST elevation myocardial infarction is diagnosed when injury \
accompanies ischemic symptoms. Serial troponin testing at 0 and 3 hours is common.",
    ),
];

/// Writes a three-document corpus used by the demo pipeline and tests.
pub fn write_sample_corpus(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut index = BTreeMap::new();
    for (id, title, url, body) in SAMPLE_DOCS {
        let file = format!("{id}.txt");
        std::fs::write(dir.join(&file), body)?;
        index.insert(
            id.to_string(),
            IndexEntry {
                file,
                title: title.to_string(),
                url: url.to_string(),
                fetched_at: "2024-01-01T00:00:00".to_string(),
            },
        );
    }
    let json = serde_json::to_string_pretty(&index).expect("index serializes");
    std::fs::write(dir.join(INDEX_FILE), json + "\n")
}
