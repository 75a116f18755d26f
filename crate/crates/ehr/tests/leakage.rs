//! No tool output may contain a timestamp later than the snapshot cutoff.

use std::sync::{Arc, OnceLock};

use clinseek_core::{names, AnswerSchema, Arguments, TaskGroup, TaskInstance, Timestamp};
use clinseek_ehr::{fixture_generate, EhrSession, EhrStore, FixtureConfig};
use proptest::prelude::*;
use regex::Regex;
use serde_json::json;

const SEEDS: u64 = 4;

fn stores() -> &'static Vec<(tempfile::TempDir, Arc<EhrStore>)> {
    static STORES: OnceLock<Vec<(tempfile::TempDir, Arc<EhrStore>)>> = OnceLock::new();
    STORES.get_or_init(|| {
        (0..SEEDS)
            .map(|seed| {
                let dir = tempfile::tempdir().unwrap();
                fixture_generate(
                    dir.path(),
                    FixtureConfig {
                        seed,
                        n_patients: 4,
                        n_events_per_patient: 25,
                    },
                )
                .unwrap();
                let store = Arc::new(EhrStore::open(dir.path()).unwrap());
                (dir, store)
            })
            .collect()
    })
}

fn timestamps(text: &str) -> Vec<Timestamp> {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d{4}-\d{2}-\d{2}[ T]\d{2}:\d{2}:\d{2}").unwrap())
        .find_iter(text)
        .map(|m| Timestamp::parse(m.as_str()).unwrap())
        .collect()
}

const EVENT_TABLES: [(&str, &str, &str); 6] = [
    ("admissions", "admittime", "dischtime"),
    ("labevents", "charttime", "charttime"),
    ("microbiologyevents", "charttime", "charttime"),
    ("prescriptions", "starttime", "stoptime"),
    ("transfers", "intime", "outtime"),
    ("diagnoses_icd", "charttime", "charttime"),
];

/// Adversarial read-only queries that try to surface late rows.
fn sql_template(i: usize, t: &str, tc: &str, other: &str, t2: &str, tc2: &str) -> String {
    match i % 10 {
        0 => format!("SELECT MAX({tc}) FROM {t}"),
        1 => format!("SELECT * FROM {t} ORDER BY {tc} DESC LIMIT 5"),
        2 => format!("SELECT * FROM {t} WHERE {tc} > '2100-01-01' ORDER BY {tc} DESC"),
        3 => format!("SELECT {other} FROM {t} WHERE {other} IS NOT NULL ORDER BY {other} DESC"),
        4 => format!("SELECT {tc} FROM {t} UNION SELECT {tc2} FROM {t2} ORDER BY 1 DESC"),
        5 => format!("WITH x AS (SELECT * FROM {t}) SELECT MAX({other}), MIN({tc}) FROM x"),
        6 => format!("SELECT a.{tc}, b.{tc2} FROM {t} a JOIN {t2} b ON a.subject_id = b.subject_id LIMIT 50"),
        7 => format!("SELECT * FROM {t} WHERE subject_id <> (SELECT MIN(subject_id) FROM {t})"),
        8 => format!("SELECT COUNT(*), MAX({tc}) FROM {t} GROUP BY subject_id"),
        _ => format!("SELECT * FROM (SELECT * FROM {t} ORDER BY {other} DESC) LIMIT 3"),
    }
}

fn call(s: &mut EhrSession, name: &str, v: serde_json::Value) -> String {
    let args: Arguments = v.as_object().unwrap().clone();
    match s.call(name, &args) {
        Ok(text) => text,
        Err(e) => e.to_string(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn no_output_postdates_cutoff(
        seed in 0..SEEDS,
        patient in 0u64..4,
        cutoff_offset in -50i64..200,
        table in 0usize..6,
        table2 in 0usize..6,
        template in 0usize..10,
        start_off in -400i64..400,
        span in 0i64..2000,
    ) {
        let (_, store) = &stores()[seed as usize];
        let patient = (10_000_001 + patient).to_string();
        let everything = store.snapshot(&patient, Timestamp::parse("2300-01-01").unwrap()).unwrap();
        let first = everything.event_tables().filter_map(|t| t.rows.iter().filter_map(|r| t.row_time(r)).min()).min().unwrap();
        let cutoff = first.plus_seconds(cutoff_offset * 3600);
        let task = TaskInstance {
            task_id: "leak".into(),
            patient_id: patient.clone(),
            cutoff,
            instruction: "q".into(),
            modality_meta: vec![],
            answer_schema: AnswerSchema::free_list(),
            group: TaskGroup::RiskPrediction,
        };
        let mut s = EhrSession::new(store.clone(), task);
        let (t, tc, other) = EVENT_TABLES[table];
        let (t2, tc2, _) = EVENT_TABLES[table2];
        let start = cutoff.plus_seconds(start_off * 3600);
        let end = start.plus_seconds(span * 3600);
        let outputs = [
            call(&mut s, names::LOAD_EHR, json!({})),
            call(&mut s, names::GET_LATEST_RECORDS, json!({"table": t})),
            call(&mut s, names::GET_RECORDS_BY_TIME, json!({
                "table": t, "start": start.to_table_string(), "end": end.to_table_string()})),
            call(&mut s, names::GET_TABLE_DESCRIPTION, json!({"table": t})),
            call(&mut s, names::RUN_SQL_QUERY, json!({"sql": sql_template(template, t, tc, other, t2, tc2)})),
            call(&mut s, names::GET_CANDIDATES_BY_KEYWORD, json!({"keyword": "a", "table": "d_icd_diagnoses"})),
        ];
        for out in &outputs {
            for found in timestamps(out) {
                prop_assert!(found <= cutoff, "{found} > {cutoff} in\n{out}");
            }
        }
    }
}

#[test]
fn snapshot_rows_never_postdate_cutoff() {
    for (_, store) in stores() {
        for patient in store.patients() {
            let snap = store.snapshot(&patient, Timestamp::parse("2110-06-01").unwrap()).unwrap();
            for t in snap.event_tables() {
                for row in &t.rows {
                    for v in row {
                        if let Some(x) = v.as_timestamp() {
                            assert!(x <= snap.cutoff);
                        }
                    }
                }
            }
        }
    }
}
