use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Local, NaiveDateTime};
use clinseek_core::Timestamp;

use crate::error::StoreError;
use crate::manifest::{TableKind, TableManifest, TableSpec};
use crate::value::Value;

pub type Row = Vec<Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub spec: TableSpec,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn kind(&self) -> TableKind {
        self.spec.kind
    }

    pub fn row_time(&self, row: &Row) -> Option<Timestamp> {
        self.spec
            .time_index()
            .and_then(|i| row.get(i))
            .and_then(Value::as_timestamp)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.spec.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// Raw tables of a data directory, parsed once and shared across episodes.
#[derive(Debug)]
pub struct EhrStore {
    root: PathBuf,
    manifest: TableManifest,
    tables: BTreeMap<String, Arc<Table>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: PathBuf,
    pub loaded_at: NaiveDateTime,
}

/// One patient's records as visible at `cutoff`. Immutable once built.
///
/// Event tables hold only this patient's rows whose time column is at or
/// before the cutoff; rows with a null time are dropped, and any other
/// timestamp cell later than the cutoff (a discharge time, say) is blanked.
/// Dictionary tables are shared unfiltered.
#[derive(Debug, Clone)]
pub struct EhrSnapshot {
    pub patient_id: String,
    pub cutoff: Timestamp,
    pub manifest: TableManifest,
    pub provenance: Provenance,
    tables: BTreeMap<String, Arc<Table>>,
}

impl EhrStore {
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        let manifest_path = root.join(TableManifest::FILE_NAME);
        let text =
            std::fs::read_to_string(&manifest_path).map_err(|e| StoreError::io(&manifest_path, e))?;
        let manifest: TableManifest =
            serde_json::from_str(&text).map_err(|e| StoreError::MalformedManifest {
                path: manifest_path.display().to_string(),
                message: e.to_string(),
            })?;
        manifest
            .validate()
            .map_err(|message| StoreError::MalformedManifest {
                path: manifest_path.display().to_string(),
                message,
            })?;
        let mut tables = BTreeMap::new();
        for spec in &manifest.tables {
            let table = read_table(root, spec)?;
            tables.insert(spec.name.clone(), Arc::new(table));
        }
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
            tables,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &TableManifest {
        &self.manifest
    }

    pub fn raw_table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name).map(Arc::as_ref)
    }

    /// Every patient id present in any event table, sorted.
    pub fn patients(&self) -> Vec<String> {
        let mut set = std::collections::BTreeSet::new();
        for t in self.tables.values().filter(|t| t.kind() == TableKind::EventTable) {
            let Some(pi) = t.spec.patient_index() else { continue };
            for row in &t.rows {
                if let Some(id) = row[pi].id_string() {
                    set.insert(id);
                }
            }
        }
        set.into_iter().collect()
    }

    pub fn has_patient(&self, patient_id: &str) -> bool {
        self.tables
            .values()
            .filter(|t| t.kind() == TableKind::EventTable)
            .any(|t| {
                let Some(pi) = t.spec.patient_index() else { return false };
                t.rows
                    .iter()
                    .any(|r| r[pi].id_string().as_deref() == Some(patient_id))
            })
    }

    pub fn snapshot(&self, patient_id: &str, cutoff: Timestamp) -> Result<EhrSnapshot, StoreError> {
        if !self.has_patient(patient_id) {
            return Err(StoreError::UnknownPatient(patient_id.to_string()));
        }
        let mut tables = BTreeMap::new();
        for (name, table) in &self.tables {
            let visible = match table.kind() {
                TableKind::DictionaryTable => Arc::clone(table),
                TableKind::EventTable => Arc::new(filter_event_table(table, patient_id, cutoff)),
            };
            tables.insert(name.clone(), visible);
        }
        Ok(EhrSnapshot {
            patient_id: patient_id.to_string(),
            cutoff,
            manifest: self.manifest.clone(),
            provenance: Provenance {
                source: self.root.clone(),
                loaded_at: Local::now().naive_local(),
            },
            tables,
        })
    }
}

/// Opens `source` and materializes one snapshot.
pub fn load_snapshot(
    source: &Path,
    patient_id: &str,
    cutoff: Timestamp,
) -> Result<EhrSnapshot, StoreError> {
    EhrStore::open(source)?.snapshot(patient_id, cutoff)
}

fn filter_event_table(table: &Table, patient_id: &str, cutoff: Timestamp) -> Table {
    let pi = table.spec.patient_index().expect("validated event table");
    let ti = table.spec.time_index().expect("validated event table");
    let ts_columns: Vec<usize> = table
        .spec
        .columns
        .iter()
        .enumerate()
        .filter(|(i, c)| *i != ti && c.ty == crate::manifest::ColumnType::Timestamp)
        .map(|(i, _)| i)
        .collect();
    let rows = table
        .rows
        .iter()
        .filter(|r| r[pi].id_string().as_deref() == Some(patient_id))
        .filter(|r| r[ti].as_timestamp().is_some_and(|t| t <= cutoff))
        .map(|r| {
            let mut row = r.clone();
            for &i in &ts_columns {
                if row[i].as_timestamp().is_some_and(|t| t > cutoff) {
                    row[i] = Value::Null;
                }
            }
            row
        })
        .collect();
    Table {
        spec: table.spec.clone(),
        rows,
    }
}

fn read_table(root: &Path, spec: &TableSpec) -> Result<Table, StoreError> {
    let path = root.join(spec.file_name());
    let file = std::fs::File::open(&path).map_err(|e| StoreError::io(&path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(std::io::BufReader::new(file));
    let malformed = |row: usize, column: &str, message: String| StoreError::MalformedTable {
        table: spec.name.clone(),
        row,
        column: column.to_string(),
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| malformed(0, "", e.to_string()))?
        .clone();
    let expected: Vec<&str> = spec.columns.iter().map(|c| c.name.as_str()).collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        let column = expected
            .iter()
            .zip(got.iter().chain(std::iter::repeat(&"")))
            .find(|(e, g)| e != g)
            .map(|(e, _)| e.to_string())
            .unwrap_or_default();
        return Err(malformed(
            0,
            &column,
            format!("header {got:?} does not match manifest columns {expected:?}"),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| malformed(row_no, "", e.to_string()))?;
        let mut row = Vec::with_capacity(spec.columns.len());
        for (field, col) in record.iter().zip(&spec.columns) {
            let v = Value::coerce(field, col.ty).map_err(|m| malformed(row_no, &col.name, m))?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Table {
        spec: spec.clone(),
        rows,
    })
}

impl EhrSnapshot {
    /// Builds a snapshot directly from in-memory tables, applying the same
    /// visibility rules as [`EhrStore::snapshot`]. Used for tests and for
    /// embedding small hand-made tables.
    pub fn from_tables(
        patient_id: &str,
        cutoff: Timestamp,
        manifest: TableManifest,
        tables: Vec<Table>,
    ) -> Result<Self, StoreError> {
        manifest
            .validate()
            .map_err(|message| StoreError::MalformedManifest {
                path: "<memory>".into(),
                message,
            })?;
        let declared: HashSet<&str> = manifest.tables.iter().map(|t| t.name.as_str()).collect();
        let mut map = BTreeMap::new();
        for t in tables {
            if !declared.contains(t.spec.name.as_str()) {
                return Err(StoreError::MalformedManifest {
                    path: "<memory>".into(),
                    message: format!("table {} not in manifest", t.spec.name),
                });
            }
            let visible = match t.kind() {
                TableKind::DictionaryTable => t,
                TableKind::EventTable => filter_event_table(&t, patient_id, cutoff),
            };
            map.insert(visible.spec.name.clone(), Arc::new(visible));
        }
        Ok(Self {
            patient_id: patient_id.to_string(),
            cutoff,
            manifest,
            provenance: Provenance {
                source: PathBuf::from("<memory>"),
                loaded_at: Local::now().naive_local(),
            },
            tables: map,
        })
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name).map(Arc::as_ref)
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values().map(Arc::as_ref)
    }

    pub fn event_tables(&self) -> impl Iterator<Item = &Table> {
        self.tables().filter(|t| t.kind() == TableKind::EventTable)
    }

    /// Latest timestamp held anywhere in the snapshot's event tables.
    pub fn max_event_time(&self) -> Option<Timestamp> {
        self.event_tables()
            .flat_map(|t| t.rows.iter().flat_map(|r| r.iter().filter_map(Value::as_timestamp)))
            .max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::{ColumnSpec, ColumnType};
    use std::io::Write;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    fn write_dir(lab_rows: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let manifest = TableManifest {
            tables: vec![
                TableSpec {
                    name: "labevents".into(),
                    kind: TableKind::EventTable,
                    description: "labs".into(),
                    file: None,
                    time_column: Some("charttime".into()),
                    patient_column: Some("subject_id".into()),
                    code_column: None,
                    title_column: None,
                    columns: vec![
                        ColumnSpec { name: "subject_id".into(), ty: ColumnType::Integer, description: String::new() },
                        ColumnSpec { name: "charttime".into(), ty: ColumnType::Timestamp, description: String::new() },
                        ColumnSpec { name: "valuenum".into(), ty: ColumnType::Real, description: String::new() },
                        ColumnSpec { name: "storetime".into(), ty: ColumnType::Timestamp, description: String::new() },
                    ],
                },
                TableSpec {
                    name: "d_labitems".into(),
                    kind: TableKind::DictionaryTable,
                    description: "items".into(),
                    file: None,
                    time_column: None,
                    patient_column: None,
                    code_column: Some("itemid".into()),
                    title_column: Some("label".into()),
                    columns: vec![
                        ColumnSpec { name: "itemid".into(), ty: ColumnType::Integer, description: String::new() },
                        ColumnSpec { name: "label".into(), ty: ColumnType::Text, description: String::new() },
                    ],
                },
            ],
        };
        std::fs::write(
            dir.path().join("manifest.json"),
            serde_json::to_string_pretty(&manifest).unwrap(),
        )
        .unwrap();
        let mut f = std::fs::File::create(dir.path().join("labevents.csv")).unwrap();
        writeln!(f, "subject_id,charttime,valuenum,storetime").unwrap();
        f.write_all(lab_rows.as_bytes()).unwrap();
        std::fs::write(
            dir.path().join("d_labitems.csv"),
            "itemid,label\n50912,Creatinine\n51222,Hemoglobin\n",
        )
        .unwrap();
        dir
    }

    const LABS: &str = "\
1,2150-01-01 08:00:00,1.0,2150-01-01 08:30:00
1,2150-01-01 10:00:00,2.0,2150-01-01 12:00:00
1,2150-01-01 11:00:00,3.0,2150-01-01 11:10:00
2,2150-01-01 09:00:00,4.0,
1,,5.0,
";

    #[test]
    fn inclusive_cutoff_filter() {
        let dir = write_dir(LABS);
        // events at cutoff-2h, cutoff, cutoff+1h
        let snap = load_snapshot(dir.path(), "1", ts("2150-01-01 10:00:00")).unwrap();
        let labs = snap.table("labevents").unwrap();
        let values: Vec<_> = labs.rows.iter().map(|r| r[2].clone()).collect();
        assert_eq!(values, vec![Value::Real(1.0), Value::Real(2.0)]);
    }

    #[test]
    fn secondary_timestamps_after_cutoff_are_blanked() {
        let dir = write_dir(LABS);
        let snap = load_snapshot(dir.path(), "1", ts("2150-01-01 10:00:00")).unwrap();
        let labs = snap.table("labevents").unwrap();
        assert!(labs.rows[0][3].as_timestamp().is_some());
        assert_eq!(labs.rows[1][3], Value::Null);
    }

    #[test]
    fn cutoff_before_everything() {
        let dir = write_dir(LABS);
        let snap = load_snapshot(dir.path(), "1", ts("2100-01-01 00:00:00")).unwrap();
        assert!(snap.table("labevents").unwrap().rows.is_empty());
        assert_eq!(snap.table("d_labitems").unwrap().rows.len(), 2);
    }

    #[test]
    fn unknown_patient() {
        let dir = write_dir(LABS);
        let err = load_snapshot(dir.path(), "no_such_patient", ts("2150-01-01 10:00:00")).unwrap_err();
        assert!(matches!(err, StoreError::UnknownPatient(_)));
        assert_eq!(err.code(), clinseek_core::ErrorCode::UnknownPatient);
    }

    #[test]
    fn null_times_never_visible() {
        let dir = write_dir(LABS);
        let snap = load_snapshot(dir.path(), "1", ts("2200-01-01 00:00:00")).unwrap();
        let labs = snap.table("labevents").unwrap();
        assert_eq!(labs.rows.len(), 3);
        assert!(labs.rows.iter().all(|r| r[1].as_timestamp().is_some()));
    }

    #[test]
    fn malformed_row_names_table_row_and_column() {
        let dir = write_dir("1,2150-01-01 08:00:00,abc,\n");
        let err = EhrStore::open(dir.path()).unwrap_err();
        match err {
            StoreError::MalformedTable { table, row, column, .. } => {
                assert_eq!(table, "labevents");
                assert_eq!(row, 1);
                assert_eq!(column, "valuenum");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_manifest() {
        let dir = write_dir(LABS);
        std::fs::write(dir.path().join("manifest.json"), "{\"tables\": 3}").unwrap();
        let err = EhrStore::open(dir.path()).unwrap_err();
        assert_eq!(err.code(), clinseek_core::ErrorCode::MalformedManifest);
    }

    #[test]
    fn patients_listed() {
        let dir = write_dir(LABS);
        let store = EhrStore::open(dir.path()).unwrap();
        assert_eq!(store.patients(), vec!["1".to_string(), "2".to_string()]);
    }
}
