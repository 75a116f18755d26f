//! The EHR tools as pure functions of a snapshot plus arguments.

use std::collections::HashSet;

use clinseek_core::{dedup_normalized, AnswerKind, AnswerSchema, Timestamp};
use serde::Serialize;

use crate::error::ToolError;
use crate::manifest::{ColumnSpec, TableKind};
use crate::render::text_table;
use crate::similarity::SimilarityBackend;
use crate::store::{EhrSnapshot, Table};
use crate::value::Value;

pub const DEFAULT_RECORD_LIMIT: usize = 200;
pub const MAX_CANDIDATES: usize = 50;
pub const THINK_ACK: &str = "Thought recorded.";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableDescription {
    pub name: String,
    pub kind: TableKind,
    pub description: String,
    pub time_column: Option<String>,
    pub columns: Vec<ColumnSpec>,
    pub visible_rows: usize,
}

impl TableDescription {
    pub fn render(&self) -> String {
        let mut out = format!(
            "table: {} ({})\ndescription: {}\nvisible rows: {}\n",
            self.name, self.kind, self.description, self.visible_rows
        );
        if let Some(tc) = &self.time_column {
            out.push_str(&format!("time column: {tc}\n"));
        }
        out.push('\n');
        out.push_str(&render_columns(&self.columns));
        out
    }
}

pub fn render_columns(columns: &[ColumnSpec]) -> String {
    let rows: Vec<Vec<String>> = columns
        .iter()
        .map(|c| vec![c.name.clone(), c.ty.to_string(), c.description.clone()])
        .collect();
    text_table(&["column", "type", "description"], &rows)
}

/// Rows returned by the record-retrieval tools.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSet {
    pub table: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub total: usize,
    pub capped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RecordSet {
    pub fn render(&self) -> String {
        let mut out = format!(
            "table: {}\nrows: {} of {}{}\n",
            self.table,
            self.rows.len(),
            self.total,
            if self.capped { " (capped)" } else { "" }
        );
        if let Some(note) = &self.note {
            out.push_str(&format!("note: {note}\n"));
        }
        out.push('\n');
        out.push_str(&text_table(&self.columns, &self.rows));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub row_count_total: usize,
    pub capped: bool,
}

impl SqlResult {
    pub fn render(&self) -> String {
        format!(
            "rows: {} of {}{}\n\n{}",
            self.rows.len(),
            self.row_count_total,
            if self.capped { " (capped)" } else { "" },
            text_table(&self.columns, &self.rows)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEntry {
    pub code: String,
    pub title: String,
    pub source_table: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

pub fn render_candidates(entries: &[CandidateEntry]) -> String {
    if entries.is_empty() {
        return "no matching candidates\n".to_string();
    }
    let with_score = entries.iter().any(|e| e.score.is_some());
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let mut r = vec![e.code.clone(), e.title.clone(), e.source_table.clone()];
            if with_score {
                r.push(e.score.map_or(String::new(), |s| format!("{s:.4}")));
            }
            r
        })
        .collect();
    if with_score {
        text_table(&["code", "title", "table", "score"], &rows)
    } else {
        text_table(&["code", "title", "table"], &rows)
    }
}

fn table<'a>(snapshot: &'a EhrSnapshot, name: &str) -> Result<&'a Table, ToolError> {
    snapshot
        .table(name)
        .ok_or_else(|| ToolError::UnknownTable(name.to_string()))
}

fn event_table<'a>(snapshot: &'a EhrSnapshot, name: &str) -> Result<&'a Table, ToolError> {
    let t = table(snapshot, name)?;
    if t.kind() != TableKind::EventTable {
        return Err(ToolError::NotEventTable(name.to_string()));
    }
    Ok(t)
}

fn dictionary_table<'a>(snapshot: &'a EhrSnapshot, name: &str) -> Result<&'a Table, ToolError> {
    let t = table(snapshot, name)?;
    if t.kind() != TableKind::DictionaryTable {
        return Err(ToolError::NotDictionaryTable(name.to_string()));
    }
    Ok(t)
}

/// Event tables first, alphabetical within each kind.
pub fn get_table_names(snapshot: &EhrSnapshot) -> Vec<(String, TableKind)> {
    let mut names: Vec<(String, TableKind)> = snapshot
        .manifest
        .tables
        .iter()
        .map(|t| (t.name.clone(), t.kind))
        .collect();
    names.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    names
}

pub fn render_table_names(names: &[(String, TableKind)]) -> String {
    let rows: Vec<Vec<String>> = names
        .iter()
        .map(|(n, k)| vec![n.clone(), k.to_string()])
        .collect();
    text_table(&["table", "kind"], &rows)
}

pub fn get_table_description(
    snapshot: &EhrSnapshot,
    name: &str,
) -> Result<TableDescription, ToolError> {
    let t = table(snapshot, name)?;
    Ok(TableDescription {
        name: t.spec.name.clone(),
        kind: t.spec.kind,
        description: t.spec.description.clone(),
        time_column: t.spec.time_column.clone(),
        columns: t.spec.columns.clone(),
        visible_rows: t.rows.len(),
    })
}

pub fn get_column_names(snapshot: &EhrSnapshot, name: &str) -> Result<Vec<ColumnSpec>, ToolError> {
    Ok(table(snapshot, name)?.spec.columns.clone())
}

/// Rows with `start <= time <= min(end, cutoff)`, ascending by time.
pub fn get_records_by_time(
    snapshot: &EhrSnapshot,
    name: &str,
    start: Timestamp,
    end: Timestamp,
    limit: Option<usize>,
) -> Result<RecordSet, ToolError> {
    let t = event_table(snapshot, name)?;
    if start > end {
        return Err(ToolError::InvalidRange {
            start: start.to_table_string(),
            end: end.to_table_string(),
        });
    }
    let limit = limit.unwrap_or(DEFAULT_RECORD_LIMIT);
    if limit == 0 {
        return Err(ToolError::InvalidArguments("limit must be positive".into()));
    }
    let end = end.min(snapshot.cutoff);
    let mut hits: Vec<(Timestamp, &Vec<Value>)> = t
        .rows
        .iter()
        .filter_map(|r| t.row_time(r).map(|ts| (ts, r)))
        .filter(|(ts, _)| *ts >= start && *ts <= end)
        .collect();
    hits.sort_by_key(|(ts, _)| *ts);
    Ok(capped_set(t, hits.into_iter().map(|(_, r)| r), limit, None))
}

/// All rows sharing the latest visible time.
pub fn get_latest_records(snapshot: &EhrSnapshot, name: &str) -> Result<RecordSet, ToolError> {
    let t = event_table(snapshot, name)?;
    let Some(max) = t.rows.iter().filter_map(|r| t.row_time(r)).max() else {
        return Ok(capped_set(
            t,
            std::iter::empty(),
            DEFAULT_RECORD_LIMIT,
            Some("table has no records visible at the cutoff".into()),
        ));
    };
    let rows = t.rows.iter().filter(|r| t.row_time(r) == Some(max));
    Ok(capped_set(
        t,
        rows,
        DEFAULT_RECORD_LIMIT,
        Some(format!("latest time {max}")),
    ))
}

fn capped_set<'a>(
    t: &Table,
    rows: impl Iterator<Item = &'a Vec<Value>>,
    limit: usize,
    note: Option<String>,
) -> RecordSet {
    let mut kept = Vec::new();
    let mut total = 0;
    for r in rows {
        total += 1;
        if kept.len() < limit {
            kept.push(r.clone());
        }
    }
    RecordSet {
        table: t.spec.name.clone(),
        columns: t.column_names(),
        capped: total > kept.len(),
        rows: kept,
        total,
        note,
    }
}

fn check_top_k(top_k: usize) -> Result<usize, ToolError> {
    if top_k == 0 {
        return Err(ToolError::InvalidArguments("top_k must be positive".into()));
    }
    Ok(top_k.min(MAX_CANDIDATES))
}

fn entries(t: &Table) -> impl Iterator<Item = (String, String)> + '_ {
    let ci = t.spec.code_index();
    let ti = t.spec.title_index();
    t.rows.iter().map(move |r| (r[ci].to_string(), r[ti].to_string()))
}

/// Ranked by descending score, ties by ascending code.
pub fn get_candidates_by_semantic_similarity(
    snapshot: &EhrSnapshot,
    backend: &dyn SimilarityBackend,
    query: &str,
    name: &str,
    top_k: usize,
) -> Result<Vec<CandidateEntry>, ToolError> {
    let t = dictionary_table(snapshot, name)?;
    if query.trim().is_empty() {
        return Err(ToolError::EmptyQuery);
    }
    let top_k = check_top_k(top_k)?;
    let mut scored: Vec<(f64, String, String)> = entries(t)
        .map(|(code, title)| (backend.score(query, &title).clamp(0.0, 1.0), code, title))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let mut seen = HashSet::new();
    Ok(scored
        .into_iter()
        .filter(|(_, code, _)| seen.insert(code.clone()))
        .take(top_k)
        .map(|(score, code, title)| CandidateEntry {
            code,
            title,
            source_table: name.to_string(),
            score: Some(score),
        })
        .collect())
}

/// Case-insensitive title substring match, ascending by code.
pub fn get_candidates_by_keyword(
    snapshot: &EhrSnapshot,
    keyword: &str,
    name: &str,
    top_k: usize,
) -> Result<Vec<CandidateEntry>, ToolError> {
    let t = dictionary_table(snapshot, name)?;
    if keyword.trim().is_empty() {
        return Err(ToolError::EmptyQuery);
    }
    let top_k = check_top_k(top_k)?;
    let needle = keyword.to_lowercase();
    let mut hits: Vec<(String, String)> = entries(t)
        .filter(|(_, title)| title.to_lowercase().contains(&needle))
        .collect();
    hits.sort_by(|a, b| a.0.cmp(&b.0));
    hits.dedup_by(|a, b| a.0 == b.0);
    Ok(hits
        .into_iter()
        .take(top_k)
        .map(|(code, title)| CandidateEntry {
            code,
            title,
            source_table: name.to_string(),
            score: None,
        })
        .collect())
}

/// The acknowledgment returned for every recorded thought.
pub fn think(_note: &str) -> &'static str {
    THINK_ACK
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinishOutcome {
    pub answers: Vec<String>,
    pub warning: Option<String>,
}

impl FinishOutcome {
    pub fn render(&self) -> String {
        let mut out = format!("Final answer submitted: {:?}", self.answers);
        if let Some(w) = &self.warning {
            out.push_str("\nwarning: ");
            out.push_str(w);
        }
        out
    }
}

/// Normalizes and deduplicates answers; single-label tasks keep only the
/// first.
pub fn finish<S: AsRef<str>>(answers: &[S], schema: &AnswerSchema) -> FinishOutcome {
    let mut normalized = dedup_normalized(answers);
    let mut warning = None;
    if schema.kind == AnswerKind::SingleLabel && normalized.len() > 1 {
        warning = Some(format!(
            "single-label task: kept {:?}, dropped {} further answer(s)",
            normalized[0],
            normalized.len() - 1
        ));
        normalized.truncate(1);
    }
    FinishOutcome {
        answers: normalized,
        warning,
    }
}
