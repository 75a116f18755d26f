use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curated::{check_examples, read_curated, write_benchmark, CuratedExample, PairedExample};
use crate::error::BenchError;

/// How to sample examples into a benchmark.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    pub seed: u64,
    /// Examples drawn per subtask; `None` keeps every example.
    pub quota: Option<usize>,
    /// Per-subtask quotas that replace `quota`.
    pub quota_overrides: BTreeMap<String, usize>,
    /// Draw round-robin across first gold labels instead of uniformly.
    pub stratify: bool,
}

/// Counts written next to a benchmark file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub total: usize,
    pub seed: u64,
    pub quota: Option<usize>,
    pub stratify: bool,
    pub benchmark_sha256: String,
    pub groups: BTreeMap<String, usize>,
    pub subtasks: BTreeMap<String, usize>,
}

impl BenchManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

fn draw(members: &[usize], examples: &[CuratedExample], quota: usize, stratify: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if !stratify {
        let mut picked: Vec<usize> = members.choose_multiple(rng, quota).copied().collect();
        picked.sort_unstable();
        return picked;
    }
    let mut buckets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for &i in members {
        let label = clinseek_core::normalize_answer(examples[i].gold_answers.first().map_or("", |s| s.as_str()));
        buckets.entry(label).or_default().push(i);
    }
    let mut queues: Vec<Vec<usize>> = buckets
        .into_values()
        .map(|mut b| {
            b.shuffle(rng);
            b.reverse();
            b
        })
        .collect();
    let mut picked = Vec::with_capacity(quota);
    while picked.len() < quota {
        for q in queues.iter_mut() {
            if picked.len() == quota {
                break;
            }
            if let Some(i) = q.pop() {
                picked.push(i);
            }
        }
    }
    picked.sort_unstable();
    picked
}

/// Samples and pairs examples. Output is ordered by subtask name, then by
/// input position; the same seed always yields the same benchmark.
pub fn build_benchmark(
    examples: &[CuratedExample],
    config: &BuildConfig,
) -> Result<(Vec<PairedExample>, BenchManifest), BenchError> {
    check_examples(examples, "<input>")?;
    let mut by_subtask: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        by_subtask.entry(ex.subtask_key()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pairs = Vec::new();
    let mut subtasks = BTreeMap::new();
    let mut groups = BTreeMap::new();
    for (subtask, members) in &by_subtask {
        let quota = config.quota_overrides.get(subtask).copied().or(config.quota);
        let picked = match quota {
            None => members.clone(),
            Some(q) if q > members.len() => {
                return Err(BenchError::QuotaExceedsAvailable {
                    subtask: subtask.clone(),
                    quota: q,
                    available: members.len(),
                })
            }
            Some(q) => draw(members, examples, q, config.stratify, &mut rng),
        };
        for i in picked {
            let pair = PairedExample::new(examples[i].clone())?;
            *subtasks.entry(subtask.clone()).or_insert(0) += 1;
            *groups.entry(pair.agentic.group.as_str().to_string()).or_insert(0) += 1;
            pairs.push(pair);
        }
    }
    let manifest = BenchManifest {
        total: pairs.len(),
        seed: config.seed,
        quota: config.quota,
        stratify: config.stratify,
        benchmark_sha256: benchmark_digest(&pairs),
        groups,
        subtasks,
    };
    Ok((pairs, manifest))
}

/// SHA-256 of the benchmark file bytes `pairs` serialize to.
pub fn benchmark_digest(pairs: &[PairedExample]) -> String {
    let mut h = Sha256::new();
    for p in pairs {
        h.update(serde_json::to_string(p).expect("benchmark records serialize").as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Reads curated examples, builds the benchmark, and writes the benchmark
/// file plus its manifest.
pub fn build_benchmark_file(
    curated: &Path,
    out: &Path,
    manifest_path: &Path,
    config: &BuildConfig,
) -> Result<BenchManifest, BenchError> {
    let examples = read_curated(curated)?;
    let (pairs, manifest) = build_benchmark(&examples, config)?;
    write_benchmark(out, &pairs)?;
    std::fs::write(manifest_path, manifest.to_toml()).map_err(|e| BenchError::io(manifest_path, e))?;
    Ok(manifest)
}
