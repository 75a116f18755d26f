//! Per-episode dispatch of the EHR tools from JSON arguments.

use std::sync::Arc;

use clinseek_core::names;
use clinseek_core::{
    Arguments, ErrorCode, ParamType, TaskInstance, Timestamp, ToolFailure, ToolOutput, ToolParam,
    ToolSchema,
};
use serde_json::Value as Json;

use crate::similarity::{SimilarityBackend, TrigramCosine};
use crate::sql::{SqlLimits, SqlSession};
use crate::store::{EhrSnapshot, EhrStore};
use crate::tools::{self, FinishOutcome, DEFAULT_RECORD_LIMIT};

pub const DEFAULT_TOP_K: usize = 10;

/// Configurable result caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EhrCaps {
    pub record_limit: usize,
    pub sql: SqlLimits,
    pub default_top_k: usize,
}

impl Default for EhrCaps {
    fn default() -> Self {
        Self {
            record_limit: DEFAULT_RECORD_LIMIT,
            sql: SqlLimits::default(),
            default_top_k: DEFAULT_TOP_K,
        }
    }
}

/// EHR tool state for one episode.
///
/// The patient and cutoff come from the task; `ehr.load_ehr` takes no
/// arguments and must be called before any other data tool.
pub struct EhrSession {
    store: Arc<EhrStore>,
    task: TaskInstance,
    caps: EhrCaps,
    backend: Arc<dyn SimilarityBackend>,
    snapshot: Option<EhrSnapshot>,
    sql: Option<SqlSession>,
}

impl std::fmt::Debug for EhrSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EhrSession")
            .field("task_id", &self.task.task_id)
            .field("loaded", &self.snapshot.is_some())
            .finish_non_exhaustive()
    }
}

impl EhrSession {
    pub fn new(store: Arc<EhrStore>, task: TaskInstance) -> Self {
        Self::with(store, task, EhrCaps::default(), Arc::new(TrigramCosine))
    }

    pub fn with(
        store: Arc<EhrStore>,
        task: TaskInstance,
        caps: EhrCaps,
        backend: Arc<dyn SimilarityBackend>,
    ) -> Self {
        Self {
            store,
            task,
            caps,
            backend,
            snapshot: None,
            sql: None,
        }
    }

    pub fn snapshot(&self) -> Option<&EhrSnapshot> {
        self.snapshot.as_ref()
    }

    pub fn is_loaded(&self) -> bool {
        self.snapshot.is_some()
    }

    pub fn load(&mut self) -> Result<&EhrSnapshot, ToolFailure> {
        if self.snapshot.is_none() {
            let snap = self
                .store
                .snapshot(&self.task.patient_id, self.task.cutoff)
                .map_err(ToolFailure::from)?;
            self.snapshot = Some(snap);
        }
        Ok(self.snapshot.as_ref().expect("just loaded"))
    }

    fn loaded(&self) -> Result<&EhrSnapshot, ToolFailure> {
        self.snapshot.as_ref().ok_or_else(|| {
            ToolFailure::new(
                ErrorCode::SnapshotNotLoaded,
                format!("call {} before using other EHR tools", names::LOAD_EHR),
            )
        })
    }

    /// Normalized final answers for an `ehr.finish` call.
    pub fn finish(&self, args: &Arguments) -> Result<FinishOutcome, ToolFailure> {
        let answers = string_list(args, "answers")?;
        Ok(tools::finish(&answers, &self.task.answer_schema))
    }

    /// Runs one EHR tool. Arguments are checked against the tool's schema.
    pub fn call(&mut self, name: &str, args: &Arguments) -> ToolOutput {
        let schema = tool_schemas()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ToolFailure::new(ErrorCode::UnknownTool, format!("unknown tool {name}")))?;
        schema
            .check_arguments(args)
            .map_err(|m| ToolFailure::new(ErrorCode::InvalidArguments, m))?;

        match name {
            names::LOAD_EHR => {
                let snap = self.load()?;
                let events: usize = snap.event_tables().map(|t| t.rows.len()).sum();
                Ok(format!(
                    "Loaded EHR for patient {} as of {}: {} tables, {} event rows visible.",
                    snap.patient_id,
                    snap.cutoff,
                    snap.manifest.tables.len(),
                    events
                ))
            }
            names::THINK => Ok(tools::think(&string(args, "note")?).to_string()),
            names::FINISH => Ok(self.finish(args)?.render()),
            names::GET_TABLE_NAMES => {
                Ok(tools::render_table_names(&tools::get_table_names(self.loaded()?)))
            }
            names::GET_TABLE_DESCRIPTION => {
                let t = string(args, "table")?;
                Ok(tools::get_table_description(self.loaded()?, &t)?.render())
            }
            names::GET_COLUMN_NAMES => {
                let t = string(args, "table")?;
                Ok(tools::render_columns(&tools::get_column_names(self.loaded()?, &t)?))
            }
            names::GET_RECORDS_BY_TIME => {
                let t = string(args, "table")?;
                let start = timestamp(args, "start")?;
                let end = timestamp(args, "end")?;
                let limit = opt_usize(args, "limit")?
                    .unwrap_or(self.caps.record_limit)
                    .min(self.caps.record_limit);
                Ok(tools::get_records_by_time(self.loaded()?, &t, start, end, Some(limit))?.render())
            }
            names::GET_LATEST_RECORDS => {
                let t = string(args, "table")?;
                Ok(tools::get_latest_records(self.loaded()?, &t)?.render())
            }
            names::RUN_SQL_QUERY => {
                let sql = string(args, "sql")?;
                let snap = self.loaded()?;
                if self.sql.is_none() {
                    self.sql = Some(SqlSession::new(snap)?);
                }
                let session = self.sql.as_ref().expect("just created");
                Ok(session.query(&sql, &self.caps.sql)?.render())
            }
            names::GET_CANDIDATES_BY_SEMANTIC_SIMILARITY => {
                let query = string(args, "query")?;
                let t = string(args, "table")?;
                let k = opt_usize(args, "top_k")?.unwrap_or(self.caps.default_top_k);
                let hits = tools::get_candidates_by_semantic_similarity(
                    self.loaded()?,
                    self.backend.as_ref(),
                    &query,
                    &t,
                    k,
                )?;
                Ok(tools::render_candidates(&hits))
            }
            names::GET_CANDIDATES_BY_KEYWORD => {
                let kw = string(args, "keyword")?;
                let t = string(args, "table")?;
                let k = opt_usize(args, "top_k")?.unwrap_or(self.caps.default_top_k);
                let hits = tools::get_candidates_by_keyword(self.loaded()?, &kw, &t, k)?;
                Ok(tools::render_candidates(&hits))
            }
            _ => unreachable!("schema lookup succeeded for {name}"),
        }
    }
}

fn invalid(msg: String) -> ToolFailure {
    ToolFailure::new(ErrorCode::InvalidArguments, msg)
}

fn string(args: &Arguments, key: &str) -> Result<String, ToolFailure> {
    match args.get(key) {
        Some(Json::String(s)) => Ok(s.clone()),
        _ => Err(invalid(format!("missing string argument {key:?}"))),
    }
}

fn string_list(args: &Arguments, key: &str) -> Result<Vec<String>, ToolFailure> {
    match args.get(key) {
        Some(Json::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| invalid(format!("{key:?} must contain only strings")))
            })
            .collect(),
        _ => Err(invalid(format!("missing string-list argument {key:?}"))),
    }
}

fn timestamp(args: &Arguments, key: &str) -> Result<Timestamp, ToolFailure> {
    let raw = string(args, key)?;
    Timestamp::parse(&raw).map_err(|e| invalid(format!("{key}: {e}")))
}

fn opt_usize(args: &Arguments, key: &str) -> Result<Option<usize>, ToolFailure> {
    match args.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .filter(|&n| n > 0)
            .map(|n| Some(n as usize))
            .ok_or_else(|| invalid(format!("{key} must be a positive integer"))),
    }
}

/// Schemas of the 11 EHR tools, in canonical order.
pub fn tool_schemas() -> Vec<ToolSchema> {
    use ParamType::*;
    let table = |what: &str| ToolParam::required("table", String, what);
    vec![
        ToolSchema::new(
            names::LOAD_EHR,
            "Load the patient-specific EHR database for this task. Must be called before other EHR tools.",
            vec![],
        ),
        ToolSchema::new(
            names::GET_TABLE_DESCRIPTION,
            "Retrieve table description and column information.",
            vec![table("Table name.")],
        ),
        ToolSchema::new(
            names::GET_TABLE_NAMES,
            "Retrieve available EHR and candidate (dictionary) tables.",
            vec![],
        ),
        ToolSchema::new(
            names::GET_COLUMN_NAMES,
            "Inspect the schema of a specified table.",
            vec![table("Table name.")],
        ),
        ToolSchema::new(
            names::GET_RECORDS_BY_TIME,
            "Retrieve table records within a specified time range, in time order.",
            vec![
                table("Event table name."),
                ToolParam::required("start", String, "Start time, YYYY-MM-DD HH:MM:SS (inclusive)."),
                ToolParam::required("end", String, "End time, YYYY-MM-DD HH:MM:SS (inclusive)."),
                ToolParam::optional("limit", Integer, "Maximum rows to return (default 200)."),
            ],
        ),
        ToolSchema::new(
            names::RUN_SQL_QUERY,
            "Execute a single read-only SQL SELECT for filtering, joining and aggregating the patient's tables.",
            vec![ToolParam::required("sql", String, "One SELECT statement (CTEs allowed).")],
        ),
        ToolSchema::new(
            names::GET_CANDIDATES_BY_SEMANTIC_SIMILARITY,
            "Retrieve candidate medical terms from a dictionary table ranked by similarity to a query.",
            vec![
                ToolParam::required("query", String, "Free-text query."),
                table("Dictionary table name."),
                ToolParam::optional("top_k", Integer, "Number of candidates (default 10, at most 50)."),
            ],
        ),
        ToolSchema::new(
            names::GET_CANDIDATES_BY_KEYWORD,
            "Search dictionary codes whose title contains a keyword.",
            vec![
                ToolParam::required("keyword", String, "Case-insensitive substring."),
                table("Dictionary table name."),
                ToolParam::optional("top_k", Integer, "Number of candidates (default 10, at most 50)."),
            ],
        ),
        ToolSchema::new(
            names::GET_LATEST_RECORDS,
            "Find the latest timestamp in an event table and return all records at that time.",
            vec![table("Event table name.")],
        ),
        ToolSchema::new(
            names::THINK,
            "Record intermediate reasoning.",
            vec![ToolParam::required("note", String, "The reasoning to record.")],
        ),
        ToolSchema::new(
            names::FINISH,
            "Submit the final answer list and end the episode.",
            vec![ToolParam::required("answers", StringList, "Final answers.")],
        ),
    ]
}
