//! Patient EHR access for evidence-seeking agents.
//!
//! An [`EhrStore`] parses a data directory (manifest plus one CSV per
//! table) once; [`EhrStore::snapshot`] then materializes the rows of one
//! patient visible at a cutoff. All tools in [`tools`] operate on a
//! snapshot, so nothing recorded after the cutoff is reachable from them,
//! including arbitrary read-only SQL.

pub mod error;
pub mod fixture;
pub mod manifest;
pub mod render;
pub mod session;
pub mod similarity;
pub mod sql;
pub mod store;
pub mod tools;
pub mod value;

pub use error::{StoreError, ToolError};
pub use fixture::{fixture_generate, FixtureConfig, FixtureSummary};
pub use manifest::{ColumnSpec, ColumnType, TableKind, TableManifest, TableSpec};
pub use session::{tool_schemas, EhrCaps, EhrSession};
pub use similarity::{SimilarityBackend, TrigramCosine};
pub use sql::{SqlLimits, SqlSession};
pub use store::{load_snapshot, EhrSnapshot, EhrStore, Provenance, Table};
pub use tools::{CandidateEntry, FinishOutcome, RecordSet, SqlResult, TableDescription};
pub use value::Value;
