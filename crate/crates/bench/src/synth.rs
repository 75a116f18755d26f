//! Synthetic curated examples drawn from a fixture EHR store, so the
//! pairing and build logic can run without credentialed data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use clinseek_core::{AnswerSchema, ImageRef, TaskGroup, Timestamp};
use clinseek_ehr::{ColumnType, EhrStore, TableKind};
use clinseek_imaging::{Sidecar, CHEST_LABELS, NO_FINDING};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curated::{ContextEvent, CuratedExample, MAX_CONTEXT_EVENTS};
use crate::error::BenchError;

/// Text-only subtasks and the per-subtask draw.
pub const TEXT_SUBTASKS: usize = 45;
pub const TEXT_QUOTA: usize = 40;

/// Multimodal group sizes of the reference benchmark.
pub const MULTIMODAL_GROUP_SIZES: [(TaskGroup, usize); 6] = [
    (TaskGroup::CxrPresence, 177),
    (TaskGroup::CxrEnumeration, 220),
    (TaskGroup::CxrChange, 222),
    (TaskGroup::Decompensation24h, 125),
    (TaskGroup::InpatientMortality, 125),
    (TaskGroup::Phenotype, 120),
];

/// Directory (relative to the fixture root) holding synthetic images.
pub const IMAGE_DIR: &str = "images";

const CHANGE_LABELS: [&str; 3] = ["improved", "worsened", "unchanged"];

/// (ICD code prefix, phenotype) pairs used for phenotype labels.
const PHENOTYPES: &[(&str, &str)] = &[
    ("A41", "Septicemia"),
    ("R65", "Septicemia"),
    ("E11", "Diabetes mellitus without complication"),
    ("I10", "Essential hypertension"),
    ("I21", "Acute myocardial infarction"),
    ("I25", "Coronary atherosclerosis"),
    ("I48", "Cardiac dysrhythmias"),
    ("I50", "Congestive heart failure"),
    ("J18", "Pneumonia"),
    ("J44", "Chronic obstructive pulmonary disease"),
    ("J96", "Respiratory failure"),
    ("N17", "Acute renal failure"),
    ("N18", "Chronic kidney disease"),
    ("K92", "Gastrointestinal hemorrhage"),
    ("E87", "Fluid and electrolyte disorders"),
];

const NO_PHENOTYPE: &str = "None of the listed phenotypes";

fn yes_no() -> AnswerSchema {
    AnswerSchema::single_label(Some(vec!["yes".into(), "no".into()]))
}

fn phenotype_labels() -> Vec<String> {
    let mut set: BTreeSet<&str> = PHENOTYPES.iter().map(|(_, p)| *p).collect();
    set.insert(NO_PHENOTYPE);
    set.into_iter().map(str::to_string).collect()
}

/// Every event row of every patient, ordered by time then table then row.
struct Timelines {
    events: BTreeMap<String, Vec<ContextEvent>>,
}

impl Timelines {
    fn build(store: &EhrStore) -> Self {
        let mut events: BTreeMap<String, Vec<ContextEvent>> = BTreeMap::new();
        for spec in store.manifest().tables.iter().filter(|t| t.kind == TableKind::EventTable) {
            let table = store.raw_table(&spec.name).expect("manifest table loaded");
            let pi = spec.patient_index().expect("event table has patient column");
            let ti = spec.time_index().expect("event table has time column");
            for row in &table.rows {
                let (Some(patient), Some(time)) = (row[pi].id_string(), row[ti].as_timestamp()) else {
                    continue;
                };
                let mut key = BTreeMap::new();
                let mut parts = Vec::new();
                for (i, col) in spec.columns.iter().enumerate() {
                    if i == pi || col.ty == ColumnType::Timestamp || row[i].is_null() {
                        continue;
                    }
                    key.insert(col.name.clone(), row[i].to_string());
                    parts.push(format!("{}={}", col.name, row[i]));
                }
                events.entry(patient).or_default().push(ContextEvent {
                    time,
                    text: format!("{}: {}", spec.name, parts.join(", ")),
                    table: Some(spec.name.clone()),
                    key,
                });
            }
        }
        for list in events.values_mut() {
            list.sort_by(|a, b| (a.time, &a.table, &a.text).cmp(&(b.time, &b.table, &b.text)));
        }
        Self { events }
    }

    fn patients(&self) -> Vec<&String> {
        self.events.iter().filter(|(_, e)| e.len() >= 4).map(|(p, _)| p).collect()
    }

    /// A random cutoff event for `patient`: context up to it, and the rows
    /// strictly after it.
    fn split<'a>(&'a self, patient: &str, rng: &mut ChaCha8Rng) -> (Vec<ContextEvent>, &'a [ContextEvent]) {
        let all = &self.events[patient];
        let lo = all.len() / 4;
        let hi = (all.len() * 3 / 4).max(lo + 1);
        let e = rng.gen_range(lo..hi);
        let cutoff = all[e].time;
        // rows tied with the cutoff belong to the visible side
        let end = all.partition_point(|ev| ev.time <= cutoff);
        let start = (e + 1).saturating_sub(MAX_CONTEXT_EVENTS);
        (all[start..=e].to_vec(), &all[end..])
    }
}

fn within(after: &[ContextEvent], cutoff: Timestamp, hours: i64) -> impl Iterator<Item = &ContextEvent> {
    let limit = cutoff.plus_seconds(hours * 3600);
    after.iter().filter(move |e| e.time <= limit)
}

fn from_table<'a>(events: impl Iterator<Item = &'a ContextEvent>, table: &'a str) -> impl Iterator<Item = &'a ContextEvent> {
    events.filter(move |e| e.table.as_deref() == Some(table))
}

fn yn(b: bool) -> Vec<String> {
    vec![if b { "yes" } else { "no" }.to_string()]
}

/// Text-only examples: `n_subtasks` subtasks with `per_subtask` each.
///
/// Even subtasks ask whether a given lab will be abnormal within a window;
/// odd ones ask which drugs will be started within a window. Gold labels are
/// read from the rows after the cutoff.
pub fn synth_text_examples(
    store: &EhrStore,
    seed: u64,
    n_subtasks: usize,
    per_subtask: usize,
) -> Result<Vec<CuratedExample>, BenchError> {
    let lines = Timelines::build(store);
    let patients = lines.patients();
    if patients.is_empty() {
        return Err(BenchError::NoUsablePatients(TaskGroup::RiskPrediction));
    }
    let labs = clinseek_ehr::fixture::LAB_ITEMS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_subtasks * per_subtask);
    for s in 0..n_subtasks {
        let subtask = format!("ehr_{s:02}");
        let hours = [24, 48, 72][(s / 2) % 3];
        for j in 0..per_subtask {
            let patient = patients.choose(&mut rng).expect("nonempty").to_string();
            let (context, after) = lines.split(&patient, &mut rng);
            let cutoff = context.last().expect("nonempty context").time;
            let (group, instruction, gold, schema) = if s % 2 == 0 {
                let (itemid, label, ..) = labs[(s / 2) % labs.len()];
                let item = itemid.to_string();
                let abnormal = from_table(within(after, cutoff, hours), "labevents").any(|e| {
                    e.key.get("itemid") == Some(&item) && e.key.get("flag").map(String::as_str) == Some("abnormal")
                });
                (
                    TaskGroup::RiskPrediction,
                    format!("Will the patient have an abnormal {label} result within the next {hours} hours?"),
                    yn(abnormal),
                    yes_no(),
                )
            } else {
                let drugs: BTreeSet<String> = from_table(within(after, cutoff, hours), "prescriptions")
                    .filter_map(|e| e.key.get("drug").cloned())
                    .collect();
                let gold = if drugs.is_empty() { vec!["none".to_string()] } else { drugs.into_iter().collect() };
                (
                    TaskGroup::DecisionMaking,
                    format!("Which medications will be started within the next {hours} hours? Answer \"none\" if none."),
                    gold,
                    AnswerSchema::free_list(),
                )
            };
            out.push(CuratedExample {
                task_id: format!("{subtask}_{j:03}"),
                patient_id: patient,
                instruction,
                context_events: context,
                gold_answers: gold,
                group,
                subtask: Some(subtask.clone()),
                modality_meta: vec![],
                answer_schema: schema,
            });
        }
    }
    Ok(out)
}

/// A generated image and its declared labels.
#[derive(Debug, Clone)]
pub struct SynthImage {
    pub image: ImageRef,
    pub sidecar: Sidecar,
}

impl SynthImage {
    fn present(&self, label: &str) -> bool {
        self.sidecar.findings.get(label).is_some_and(|p| *p >= clinseek_imaging::REPORT_THRESHOLD)
    }

    fn findings(&self) -> Vec<String> {
        let found: Vec<String> = CHEST_LABELS
            .iter()
            .filter(|l| **l != NO_FINDING && self.present(l))
            .map(|l| l.to_string())
            .collect();
        if found.is_empty() {
            vec![NO_FINDING.to_string()]
        } else {
            found
        }
    }
}

/// Writes `n` small DICOM images with sidecar labels under
/// `root/images`. Image paths in the returned refs are relative to `root`.
pub fn write_image_set(root: &Path, n: usize, seed: u64) -> Result<Vec<SynthImage>, BenchError> {
    let dir = root.join(IMAGE_DIR);
    std::fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let name = format!("cxr_{i:04}.dcm");
        let view = ["PA", "AP"][i % 2];
        let path = dir.join(&name);
        let (w, h) = (64 + 8 * (i % 4) as u16, 64);
        clinseek_imaging::fixture::write_dicom(&path, w, h, Some(view)).map_err(|e| BenchError::io(&path, e))?;
        let mut findings = BTreeMap::new();
        for label in CHEST_LABELS.iter().filter(|l| **l != NO_FINDING) {
            let p: f64 = if rng.gen_bool(0.25) { rng.gen_range(0.55..0.99) } else { rng.gen_range(0.01..0.45) };
            findings.insert(label.to_string(), (p * 100.0).round() / 100.0);
        }
        let any = findings.values().any(|p| *p >= 0.5);
        findings.insert(NO_FINDING.to_string(), if any { 0.05 } else { 0.95 });
        let sidecar = Sidecar { findings, phrases: BTreeMap::new() };
        sidecar.write_for(&path).map_err(|e| BenchError::io(&path, e))?;
        out.push(SynthImage {
            image: ImageRef {
                study_id: format!("s{:08}", 50_000_000 + i),
                image_id: format!("img{i:04}"),
                path: Path::new(IMAGE_DIR).join(name),
                view: Some(view.to_string()),
            },
            sidecar,
        });
    }
    Ok(out)
}

/// Multimodal examples with the given per-group counts. Each example links
/// one image (two for change comparison).
pub fn synth_multimodal_examples(
    store: &EhrStore,
    images: &[SynthImage],
    seed: u64,
    sizes: &[(TaskGroup, usize)],
) -> Result<Vec<CuratedExample>, BenchError> {
    let lines = Timelines::build(store);
    let patients = lines.patients();
    if images.len() < 2 {
        return Err(BenchError::malformed("<images>", 0, "need at least two images"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &(group, n) in sizes {
        if patients.is_empty() && n > 0 {
            return Err(BenchError::NoUsablePatients(group));
        }
        for j in 0..n {
            let patient = patients.choose(&mut rng).expect("nonempty").to_string();
            let (context, after) = lines.split(&patient, &mut rng);
            let cutoff = context.last().expect("nonempty context").time;
            let a = &images[rng.gen_range(0..images.len())];
            let mut links = vec![a.image.clone()];
            let (instruction, gold, schema) = match group {
                TaskGroup::CxrPresence => {
                    let label = CHEST_LABELS[rng.gen_range(1..CHEST_LABELS.len())];
                    (format!("Is there {} on the chest X-ray?", label.to_lowercase()), yn(a.present(label)), yes_no())
                }
                TaskGroup::CxrEnumeration => (
                    "List every finding present on the chest X-ray.".to_string(),
                    a.findings(),
                    AnswerSchema::label_set(CHEST_LABELS.iter().map(|s| s.to_string()).collect()),
                ),
                TaskGroup::CxrChange => {
                    let b = loop {
                        let b = &images[rng.gen_range(0..images.len())];
                        if b.image.image_id != a.image.image_id {
                            break b;
                        }
                    };
                    links.push(b.image.clone());
                    let label = CHEST_LABELS[rng.gen_range(1..CHEST_LABELS.len())];
                    let prior = a.sidecar.findings[label];
                    let current = b.sidecar.findings[label];
                    let change = if current - prior > 0.2 {
                        CHANGE_LABELS[1]
                    } else if prior - current > 0.2 {
                        CHANGE_LABELS[0]
                    } else {
                        CHANGE_LABELS[2]
                    };
                    (
                        format!(
                            "Comparing the current study ({}) with the prior study ({}), has {} improved, worsened or remained unchanged?",
                            b.image.image_id,
                            a.image.image_id,
                            label.to_lowercase()
                        ),
                        vec![change.to_string()],
                        AnswerSchema::single_label(Some(CHANGE_LABELS.iter().map(|s| s.to_string()).collect())),
                    )
                }
                TaskGroup::Decompensation24h => {
                    let worse = from_table(within(after, cutoff, 24), "labevents")
                        .filter(|e| e.key.get("flag").map(String::as_str) == Some("abnormal"))
                        .count()
                        >= 2;
                    ("Will the patient decompensate within the next 24 hours?".to_string(), yn(worse), yes_no())
                }
                TaskGroup::InpatientMortality => {
                    let grim = from_table(within(after, cutoff, 24 * 7), "transfers")
                        .any(|e| e.text.contains("Intensive Care"));
                    ("Will the patient die during this hospital admission?".to_string(), yn(grim), yes_no())
                }
                TaskGroup::Phenotype => {
                    let codes: BTreeSet<&str> = from_table(context.iter(), "diagnoses_icd")
                        .filter_map(|e| e.key.get("icd_code").map(String::as_str))
                        .collect();
                    let mut found: BTreeSet<String> = BTreeSet::new();
                    for code in codes {
                        for (prefix, ph) in PHENOTYPES {
                            if code.starts_with(prefix) {
                                found.insert(ph.to_string());
                            }
                        }
                    }
                    if found.is_empty() {
                        found.insert(NO_PHENOTYPE.to_string());
                    }
                    (
                        "Which acute care phenotypes apply to this patient's current admission?".to_string(),
                        found.into_iter().collect(),
                        AnswerSchema::label_set(phenotype_labels()),
                    )
                }
                other => return Err(BenchError::malformed("<sizes>", 0, format!("{other} is not a multimodal group"))),
            };
            out.push(CuratedExample {
                task_id: format!("{}_{j:04}", group.as_str()),
                patient_id: patient,
                instruction,
                context_events: context,
                gold_answers: gold,
                group,
                subtask: None,
                modality_meta: links,
                answer_schema: schema,
            });
        }
    }
    Ok(out)
}
