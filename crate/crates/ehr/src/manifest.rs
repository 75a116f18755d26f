use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Text,
    Integer,
    Real,
    Timestamp,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Text => "text",
            ColumnType::Integer => "integer",
            ColumnType::Real => "real",
            ColumnType::Timestamp => "timestamp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    EventTable,
    DictionaryTable,
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableKind::EventTable => "event_table",
            TableKind::DictionaryTable => "dictionary_table",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub kind: TableKind,
    #[serde(default)]
    pub description: String,
    /// Data file relative to the manifest; defaults to `<name>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_column: Option<String>,
    /// Column holding the patient identifier; required for event tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_column: Option<String>,
    /// Dictionary tables: code and title columns used by candidate search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_column: Option<String>,
    pub columns: Vec<ColumnSpec>,
}

impl TableSpec {
    pub fn file_name(&self) -> String {
        self.file.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn time_index(&self) -> Option<usize> {
        self.time_column.as_deref().and_then(|c| self.column_index(c))
    }

    pub fn patient_index(&self) -> Option<usize> {
        self.patient_column
            .as_deref()
            .and_then(|c| self.column_index(c))
    }

    pub fn code_index(&self) -> usize {
        self.code_column
            .as_deref()
            .and_then(|c| self.column_index(c))
            .unwrap_or(0)
    }

    /// Falls back to the last text column when no title column is declared.
    pub fn title_index(&self) -> usize {
        self.title_column
            .as_deref()
            .and_then(|c| self.column_index(c))
            .or_else(|| self.columns.iter().rposition(|c| c.ty == ColumnType::Text))
            .unwrap_or(0)
    }

    fn validate(&self) -> Result<(), String> {
        if self.columns.is_empty() {
            return Err(format!("table {} declares no columns", self.name));
        }
        let mut names = HashSet::new();
        for c in &self.columns {
            if !names.insert(c.name.as_str()) {
                return Err(format!("table {} repeats column {}", self.name, c.name));
            }
        }
        match self.kind {
            TableKind::EventTable => {
                let Some(tc) = self.time_column.as_deref() else {
                    return Err(format!("event table {} has no time_column", self.name));
                };
                match self.columns.iter().find(|c| c.name == tc) {
                    Some(c) if c.ty == ColumnType::Timestamp => {}
                    Some(_) => {
                        return Err(format!(
                            "time_column {tc} of {} is not a timestamp column",
                            self.name
                        ))
                    }
                    None => return Err(format!("time_column {tc} missing from {}", self.name)),
                }
                let Some(pc) = self.patient_column.as_deref() else {
                    return Err(format!("event table {} has no patient_column", self.name));
                };
                if self.column_index(pc).is_none() {
                    return Err(format!("patient_column {pc} missing from {}", self.name));
                }
            }
            TableKind::DictionaryTable => {
                if self.time_column.is_some() {
                    return Err(format!(
                        "dictionary table {} must not declare a time_column",
                        self.name
                    ));
                }
            }
        }
        for (what, col) in [("code_column", &self.code_column), ("title_column", &self.title_column)] {
            if let Some(c) = col {
                if self.column_index(c).is_none() {
                    return Err(format!("{what} {c} missing from {}", self.name));
                }
            }
        }
        Ok(())
    }
}

/// Table catalogue of a data directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableManifest {
    pub tables: Vec<TableSpec>,
}

impl TableManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn validate(&self) -> Result<(), String> {
        let mut names = HashSet::new();
        for t in &self.tables {
            if !names.insert(t.name.as_str()) {
                return Err(format!("duplicate table name {}", t.name));
            }
            t.validate()?;
        }
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&TableSpec> {
        self.tables.iter().find(|t| t.name == name)
    }
}
