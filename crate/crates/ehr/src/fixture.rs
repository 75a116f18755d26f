//! Deterministic synthetic EHR data shaped like a MIMIC-IV extract.
//!
//! The same seed always produces byte-identical files. Event times are on
//! whole minutes so ties between rows occur naturally.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clinseek_core::Timestamp;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::StoreError;
use crate::manifest::{ColumnSpec, ColumnType, TableKind, TableManifest, TableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureConfig {
    pub seed: u64,
    pub n_patients: usize,
    pub n_events_per_patient: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSummary {
    pub dir: PathBuf,
    pub patients: Vec<String>,
    pub event_tables: Vec<String>,
    pub dictionary_tables: Vec<String>,
}

pub const FIRST_SUBJECT_ID: u64 = 10_000_001;

/// (code, long title). Contains two sepsis titles for keyword checks.
pub const ICD_DIAGNOSES: &[(&str, &str)] = &[
    ("A419", "Sepsis, unspecified organism"),
    ("E119", "Type 2 diabetes mellitus without complications"),
    ("E872", "Acidosis"),
    ("I10", "Essential (primary) hypertension"),
    ("I214", "Non-ST elevation (NSTEMI) myocardial infarction"),
    ("I2510", "Atherosclerotic heart disease of native coronary artery without angina pectoris"),
    ("I4891", "Unspecified atrial fibrillation"),
    ("I5023", "Acute on chronic systolic (congestive) heart failure"),
    ("J189", "Pneumonia, unspecified organism"),
    ("J449", "Chronic obstructive pulmonary disease, unspecified"),
    ("J9601", "Acute respiratory failure with hypoxia"),
    ("N179", "Acute kidney failure, unspecified"),
    ("N184", "Chronic kidney disease, stage 4 (severe)"),
    ("N390", "Urinary tract infection, site not specified"),
    ("R6521", "Severe sepsis with septic shock"),
    ("D649", "Anemia, unspecified"),
    ("E871", "Hypo-osmolality and hyponatremia"),
    ("K922", "Gastrointestinal hemorrhage, unspecified"),
    ("I639", "Cerebral infarction, unspecified"),
    ("F1020", "Alcohol dependence, uncomplicated"),
];

/// (itemid, label, fluid, category, unit, typical low, typical high)
pub const LAB_ITEMS: &[(i64, &str, &str, &str, &str, f64, f64)] = &[
    (50912, "Creatinine", "Blood", "Chemistry", "mg/dL", 0.5, 4.0),
    (50971, "Potassium", "Blood", "Chemistry", "mEq/L", 3.0, 6.0),
    (50983, "Sodium", "Blood", "Chemistry", "mEq/L", 128.0, 150.0),
    (50931, "Glucose", "Blood", "Chemistry", "mg/dL", 60.0, 300.0),
    (51006, "Urea Nitrogen", "Blood", "Chemistry", "mg/dL", 5.0, 80.0),
    (50813, "Lactate", "Blood", "Blood Gas", "mmol/L", 0.5, 8.0),
    (51222, "Hemoglobin", "Blood", "Hematology", "g/dL", 6.0, 16.0),
    (51301, "White Blood Cells", "Blood", "Hematology", "K/uL", 2.0, 25.0),
    (51265, "Platelet Count", "Blood", "Hematology", "K/uL", 40.0, 450.0),
    (50885, "Bilirubin, Total", "Blood", "Chemistry", "mg/dL", 0.2, 6.0),
];

const DRUGS: &[(&str, &str, &str)] = &[
    ("Piperacillin-Tazobactam", "g", "IV"),
    ("Vancomycin", "mg", "IV"),
    ("Heparin", "UNIT", "SC"),
    ("Furosemide", "mg", "IV"),
    ("Metoprolol Tartrate", "mg", "PO"),
    ("Insulin", "UNIT", "SC"),
    ("Acetaminophen", "mg", "PO"),
    ("Pantoprazole", "mg", "IV"),
    ("Ceftriaxone", "g", "IV"),
    ("Potassium Chloride", "mEq", "PO"),
];

const CAREUNITS: &[&str] = &[
    "Emergency Department",
    "Medical Intensive Care Unit (MICU)",
    "Medicine",
    "Cardiac Vascular Intensive Care Unit (CVICU)",
    "Surgical Intensive Care Unit (SICU)",
    "Transplant",
];

const SPECIMENS: &[(&str, &str)] = &[
    ("BLOOD CULTURE", "Blood Culture, Routine"),
    ("URINE", "URINE CULTURE"),
    ("SPUTUM", "RESPIRATORY CULTURE"),
    ("MRSA SCREEN", "MRSA SCREEN"),
];

const ORGANISMS: &[&str] = &[
    "",
    "",
    "ESCHERICHIA COLI",
    "STAPHYLOCOCCUS AUREUS",
    "KLEBSIELLA PNEUMONIAE",
    "PSEUDOMONAS AERUGINOSA",
];

const ADMISSION_TYPES: &[&str] = &["EW EMER.", "URGENT", "ELECTIVE", "OBSERVATION ADMIT"];

fn col(name: &str, ty: ColumnType, description: &str) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        ty,
        description: description.into(),
    }
}

fn event_table(name: &str, description: &str, time_column: &str, columns: Vec<ColumnSpec>) -> TableSpec {
    TableSpec {
        name: name.into(),
        kind: TableKind::EventTable,
        description: description.into(),
        file: None,
        time_column: Some(time_column.into()),
        patient_column: Some("subject_id".into()),
        code_column: None,
        title_column: None,
        columns,
    }
}

/// Manifest of the generated fixture.
pub fn fixture_manifest() -> TableManifest {
    use ColumnType::*;
    let subject = || col("subject_id", Integer, "Patient identifier");
    let hadm = || col("hadm_id", Integer, "Hospital admission identifier");
    TableManifest {
        tables: vec![
            event_table(
                "admissions",
                "Hospital admissions with admission and discharge times.",
                "admittime",
                vec![
                    subject(),
                    hadm(),
                    col("admittime", Timestamp, "Admission time"),
                    col("dischtime", Timestamp, "Discharge time"),
                    col("admission_type", Text, "Admission type"),
                    col("admission_location", Text, "Where the patient was admitted from"),
                ],
            ),
            event_table(
                "labevents",
                "Laboratory measurements; itemid joins d_labitems.",
                "charttime",
                vec![
                    col("labevent_id", Integer, "Row identifier"),
                    subject(),
                    hadm(),
                    col("itemid", Integer, "Lab item identifier (d_labitems.itemid)"),
                    col("charttime", Timestamp, "Specimen collection time"),
                    col("valuenum", Real, "Numeric result"),
                    col("valueuom", Text, "Unit of measurement"),
                    col("flag", Text, "abnormal when outside the reference range"),
                ],
            ),
            event_table(
                "microbiologyevents",
                "Microbiology cultures and organisms.",
                "charttime",
                vec![
                    col("microevent_id", Integer, "Row identifier"),
                    subject(),
                    hadm(),
                    col("charttime", Timestamp, "Specimen time"),
                    col("spec_type_desc", Text, "Specimen type"),
                    col("test_name", Text, "Test performed"),
                    col("org_name", Text, "Organism grown, empty when none"),
                ],
            ),
            event_table(
                "prescriptions",
                "Medication orders.",
                "starttime",
                vec![
                    subject(),
                    hadm(),
                    col("starttime", Timestamp, "Order start"),
                    col("stoptime", Timestamp, "Order stop"),
                    col("drug", Text, "Drug name"),
                    col("dose_val_rx", Real, "Dose"),
                    col("dose_unit_rx", Text, "Dose unit"),
                    col("route", Text, "Route"),
                ],
            ),
            event_table(
                "transfers",
                "Ward and ICU transfers.",
                "intime",
                vec![
                    col("transfer_id", Integer, "Row identifier"),
                    subject(),
                    hadm(),
                    col("eventtype", Text, "admit, transfer or discharge"),
                    col("careunit", Text, "Care unit"),
                    col("intime", Timestamp, "Time entering the unit"),
                    col("outtime", Timestamp, "Time leaving the unit"),
                ],
            ),
            event_table(
                "diagnoses_icd",
                "Coded diagnoses; icd_code joins d_icd_diagnoses.",
                "charttime",
                vec![
                    subject(),
                    hadm(),
                    col("seq_num", Integer, "Priority of the diagnosis"),
                    col("icd_code", Text, "ICD code"),
                    col("icd_version", Integer, "ICD version"),
                    col("charttime", Timestamp, "Time the diagnosis was recorded"),
                ],
            ),
            TableSpec {
                name: "d_icd_diagnoses".into(),
                kind: TableKind::DictionaryTable,
                description: "ICD diagnosis code titles.".into(),
                file: None,
                time_column: None,
                patient_column: None,
                code_column: Some("icd_code".into()),
                title_column: Some("long_title".into()),
                columns: vec![
                    col("icd_code", Text, "ICD code"),
                    col("icd_version", Integer, "ICD version"),
                    col("long_title", Text, "Diagnosis title"),
                ],
            },
            TableSpec {
                name: "d_labitems".into(),
                kind: TableKind::DictionaryTable,
                description: "Laboratory item definitions.".into(),
                file: None,
                time_column: None,
                patient_column: None,
                code_column: Some("itemid".into()),
                title_column: Some("label".into()),
                columns: vec![
                    col("itemid", Integer, "Lab item identifier"),
                    col("label", Text, "Lab item name"),
                    col("fluid", Text, "Specimen fluid"),
                    col("category", Text, "Lab category"),
                ],
            },
        ],
    }
}

struct Clock {
    base: Timestamp,
}

impl Clock {
    // Whole minutes within a 30 day window after the patient's base time.
    fn at(&self, rng: &mut ChaCha8Rng) -> Timestamp {
        self.base.plus_seconds(60 * rng.gen_range(0..30 * 24 * 60))
    }
}

fn fmt_ts(t: Timestamp) -> String {
    t.to_table_string()
}

/// Writes a manifest plus one CSV per table into `dir`.
pub fn fixture_generate(dir: &Path, config: FixtureConfig) -> Result<FixtureSummary, StoreError> {
    if config.n_patients == 0 || config.n_events_per_patient == 0 {
        return Err(StoreError::InvalidArguments(
            "patients and events per patient must be positive".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let manifest = fixture_manifest();

    let mut admissions = Vec::new();
    let mut labs = Vec::new();
    let mut micro = Vec::new();
    let mut rx = Vec::new();
    let mut transfers = Vec::new();
    let mut dx = Vec::new();
    let mut patients = Vec::new();

    let epoch = NaiveDate::from_ymd_opt(2110, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let n = config.n_events_per_patient;
    let mut row_id: u64 = 1;
    for p in 0..config.n_patients {
        let subject = FIRST_SUBJECT_ID + p as u64;
        patients.push(subject.to_string());
        let base_days = rng.gen_range(0..80 * 365);
        let clock = Clock {
            base: Timestamp::from_naive(epoch + chrono::Duration::days(base_days)),
        };
        let hadm_ids: Vec<u64> = (0..n).map(|i| 20_000_000 + (p * n + i) as u64).collect();

        for &hadm in &hadm_ids {
            let admit = clock.at(&mut rng);
            let disch = admit.plus_seconds(60 * rng.gen_range(6 * 60..15 * 24 * 60));
            admissions.push(vec![
                subject.to_string(),
                hadm.to_string(),
                fmt_ts(admit),
                fmt_ts(disch),
                ADMISSION_TYPES.choose(&mut rng).unwrap().to_string(),
                "EMERGENCY ROOM".to_string(),
            ]);
        }
        for _ in 0..n {
            let &(itemid, _, _, _, unit, lo, hi) = LAB_ITEMS.choose(&mut rng).unwrap();
            let span = hi - lo;
            let value = lo - 0.15 * span + rng.gen::<f64>() * 1.3 * span;
            let flag = if value < lo || value > hi { "abnormal" } else { "" };
            labs.push(vec![
                row_id.to_string(),
                subject.to_string(),
                hadm_ids.choose(&mut rng).unwrap().to_string(),
                itemid.to_string(),
                fmt_ts(clock.at(&mut rng)),
                format!("{value:.2}"),
                unit.to_string(),
                flag.to_string(),
            ]);
            row_id += 1;
        }
        for _ in 0..n {
            let &(spec, test) = SPECIMENS.choose(&mut rng).unwrap();
            micro.push(vec![
                row_id.to_string(),
                subject.to_string(),
                hadm_ids.choose(&mut rng).unwrap().to_string(),
                fmt_ts(clock.at(&mut rng)),
                spec.to_string(),
                test.to_string(),
                ORGANISMS.choose(&mut rng).unwrap().to_string(),
            ]);
            row_id += 1;
        }
        for _ in 0..n {
            let &(drug, unit, route) = DRUGS.choose(&mut rng).unwrap();
            let start = clock.at(&mut rng);
            let stop = start.plus_seconds(60 * rng.gen_range(60..7 * 24 * 60));
            let dose = rng.gen_range(1..=40) as f64 * 12.5;
            rx.push(vec![
                subject.to_string(),
                hadm_ids.choose(&mut rng).unwrap().to_string(),
                fmt_ts(start),
                fmt_ts(stop),
                drug.to_string(),
                format!("{dose:.2}"),
                unit.to_string(),
                route.to_string(),
            ]);
        }
        for i in 0..n {
            let intime = clock.at(&mut rng);
            let outtime = intime.plus_seconds(60 * rng.gen_range(30..5 * 24 * 60));
            transfers.push(vec![
                row_id.to_string(),
                subject.to_string(),
                hadm_ids.choose(&mut rng).unwrap().to_string(),
                if i == 0 { "admit" } else { "transfer" }.to_string(),
                CAREUNITS.choose(&mut rng).unwrap().to_string(),
                fmt_ts(intime),
                fmt_ts(outtime),
            ]);
            row_id += 1;
        }
        for i in 0..n {
            let &(code, _) = ICD_DIAGNOSES.choose(&mut rng).unwrap();
            dx.push(vec![
                subject.to_string(),
                hadm_ids.choose(&mut rng).unwrap().to_string(),
                (i + 1).to_string(),
                code.to_string(),
                "10".to_string(),
                fmt_ts(clock.at(&mut rng)),
            ]);
        }
    }

    let d_icd: Vec<Vec<String>> = ICD_DIAGNOSES
        .iter()
        .map(|(c, t)| vec![c.to_string(), "10".into(), t.to_string()])
        .collect();
    let d_lab: Vec<Vec<String>> = LAB_ITEMS
        .iter()
        .map(|(id, label, fluid, cat, ..)| {
            vec![id.to_string(), label.to_string(), fluid.to_string(), cat.to_string()]
        })
        .collect();

    let data: [(&str, &Vec<Vec<String>>); 8] = [
        ("admissions", &admissions),
        ("labevents", &labs),
        ("microbiologyevents", &micro),
        ("prescriptions", &rx),
        ("transfers", &transfers),
        ("diagnoses_icd", &dx),
        ("d_icd_diagnoses", &d_icd),
        ("d_labitems", &d_lab),
    ];
    for (name, rows) in data {
        let spec = manifest.table(name).expect("fixture table");
        write_csv(&dir.join(spec.file_name()), spec, rows)?;
    }
    let manifest_path = dir.join(TableManifest::FILE_NAME);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| StoreError::io(&manifest_path, e))?;

    Ok(FixtureSummary {
        dir: dir.to_path_buf(),
        patients,
        event_tables: manifest
            .tables
            .iter()
            .filter(|t| t.kind == TableKind::EventTable)
            .map(|t| t.name.clone())
            .collect(),
        dictionary_tables: manifest
            .tables
            .iter()
            .filter(|t| t.kind == TableKind::DictionaryTable)
            .map(|t| t.name.clone())
            .collect(),
    })
}

fn write_csv(path: &Path, spec: &TableSpec, rows: &[Vec<String>]) -> Result<(), StoreError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| StoreError::io(path, e.into()))?;
    let header: Vec<&str> = spec.columns.iter().map(|c| c.name.as_str()).collect();
    w.write_record(&header)
        .map_err(|e| StoreError::io(path, e.into()))?;
    for row in rows {
        w.write_record(row).map_err(|e| StoreError::io(path, e.into()))?;
    }
    w.flush().map_err(|e| StoreError::io(path, e))
}
