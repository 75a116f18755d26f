use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clinseek_agent::{run_batch, EpisodeSpec, LlmPolicy, Policy, RuntimeBudget, ScriptedPolicy, Toolkit};
use clinseek_bench::synth::{
    synth_multimodal_examples, synth_text_examples, write_image_set, MULTIMODAL_GROUP_SIZES,
};
use clinseek_bench::{
    build_benchmark, read_benchmark, read_curated, verify_pairing, write_benchmark, write_curated, BuildConfig,
    PairedExample,
};
use clinseek_core::{read_trajectories, write_trajectories, ErrorCode, TaskInstance, Termination, Trajectory};
use clinseek_ehr::{fixture_generate, EhrStore, FixtureConfig};
use clinseek_eval::{delta_report, score_trajectories, tool_usage, EvalReport};
use clinseek_imaging::{ImageRequest, ImagingClient, RemoteBackend, DEFAULT_INFLIGHT};
use clinseek_knowledge::{write_sample_corpus, CachedCorpus, HttpBackend, KnowledgeBackend};
use clinseek_sft::{export_dataset, tokenizer_by_name, ExportOptions};
use serde_json::json;

use crate::config::{
    pick, FileConfig, ImagingSpec, KnowledgeSpec, PolicySpec, DEFAULT_MAX_ROUNDS, DEFAULT_PARALLELISM,
    KNOWLEDGE_URL_ENV,
};
use crate::error::CliError;
use crate::{
    BenchBuildArgs, BenchCmd, BenchVerifyArgs, Cli, Command, DoctorArgs, EvalCmd, EvalReportArgs, EvalScoreArgs,
    EvalToolsArgs, FixtureCmd, FixtureGenArgs, RunArgs, RunCmd, SftCmd, SftExportArgs,
};

pub const CURATED_TEXT_FILE: &str = "curated_text.jsonl";
pub const CURATED_MULTIMODAL_FILE: &str = "curated_multimodal.jsonl";
pub const EHR_DIR: &str = "ehr";
pub const KNOWLEDGE_DIR: &str = "knowledge";

pub fn run_command(cli: &Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Fixture(FixtureCmd::Gen(a)) => fixture_gen(a),
        Command::Bench(BenchCmd::Build(a)) => bench_build(a),
        Command::Bench(BenchCmd::Verify(a)) => bench_verify(a, &file),
        Command::Run(RunCmd::Agentic(a)) => run_episodes(a, &file, false),
        Command::Run(RunCmd::Curated(a)) => run_episodes(a, &file, true),
        Command::Eval(EvalCmd::Score(a)) => eval_score(a),
        Command::Eval(EvalCmd::Report(a)) => eval_report(a),
        Command::Eval(EvalCmd::Tools(a)) => eval_tools(a),
        Command::Sft(SftCmd::Export(a)) => sft_export(a),
        Command::Doctor(a) => doctor(a, &file),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn fixture_gen(a: &FixtureGenArgs) -> Result<(), CliError> {
    let ehr_dir = a.out.join(EHR_DIR);
    let summary = fixture_generate(
        &ehr_dir,
        FixtureConfig {
            seed: a.seed,
            n_patients: a.patients,
            n_events_per_patient: a.events,
        },
    )?;
    let kb = a.out.join(KNOWLEDGE_DIR);
    write_sample_corpus(&kb).map_err(|e| CliError::io(&kb, e))?;
    let store = EhrStore::open(&ehr_dir)?;
    let images = write_image_set(&a.out, a.images, a.seed)?;
    let text = synth_text_examples(&store, a.seed, a.text_subtasks, a.per_subtask)?;
    write_curated(&a.out.join(CURATED_TEXT_FILE), &text)?;
    let sizes: Vec<_> = MULTIMODAL_GROUP_SIZES
        .iter()
        .map(|&(g, n)| (g, a.multimodal_per_group.map_or(n, |cap| n.min(cap))))
        .collect();
    let multimodal = synth_multimodal_examples(&store, &images, a.seed, &sizes)?;
    write_curated(&a.out.join(CURATED_MULTIMODAL_FILE), &multimodal)?;
    println!(
        "fixture at {}: {} patients, {} images, {} text examples, {} multimodal examples",
        a.out.display(),
        summary.patients.len(),
        images.len(),
        text.len(),
        multimodal.len()
    );
    Ok(())
}

fn bench_build(a: &BenchBuildArgs) -> Result<(), CliError> {
    if a.curated.is_empty() && a.include.is_empty() {
        return Err(CliError::usage("give at least one --curated or --include file"));
    }
    let mut examples = Vec::new();
    for p in &a.curated {
        examples.extend(read_curated(p)?);
    }
    let sampled: std::collections::BTreeSet<String> = examples.iter().map(|e| e.subtask_key()).collect();
    let mut quota_overrides = BTreeMap::new();
    for p in &a.include {
        let whole = read_curated(p)?;
        for e in &whole {
            let key = e.subtask_key();
            if sampled.contains(&key) {
                return Err(CliError::usage(format!(
                    "subtask {key} appears in both --curated and --include inputs"
                )));
            }
            *quota_overrides.entry(key).or_insert(0) += 1;
        }
        examples.extend(whole);
    }
    let config = BuildConfig {
        seed: a.seed,
        quota: a.quota,
        quota_overrides,
        stratify: a.stratify,
    };
    let (pairs, manifest) = build_benchmark(&examples, &config)?;
    write_benchmark(&a.out, &pairs)?;
    let manifest_path = a.manifest.clone().unwrap_or_else(|| suffixed(&a.out, ".manifest.toml"));
    let text = manifest.to_toml();
    write_text(&manifest_path, &text)?;
    print!("{text}");
    Ok(())
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn data_root(flag: Option<&PathBuf>, file: &FileConfig, benchmark: Option<&Path>) -> PathBuf {
    flag.cloned()
        .or_else(|| file.data.clone())
        .or_else(|| benchmark.and_then(Path::parent).map(Path::to_path_buf))
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn bench_verify(a: &BenchVerifyArgs, file: &FileConfig) -> Result<(), CliError> {
    let data = data_root(a.data.as_ref(), file, Some(&a.benchmark));
    let store = EhrStore::open(&data.join(EHR_DIR))?;
    let pairs = read_benchmark(&a.benchmark)?;
    let mut failed = 0;
    for pair in &pairs {
        let report = verify_pairing(pair, &store);
        let consistent = pair.is_consistent();
        if report.passed() && consistent {
            continue;
        }
        failed += 1;
        println!("FAIL {}", report.task_id);
        if !consistent {
            println!("  settings disagree on id, instruction, patient, group, labels or cutoff");
        }
        for line in report.context_retrievable.offending.iter().chain(&report.nothing_after_cutoff.offending) {
            println!("  {line}");
        }
    }
    println!("{} pairs verified, {} passed, {} failed", pairs.len(), pairs.len() - failed, failed);
    if failed > 0 {
        return Err(CliError::domain("verification_failed", format!("{failed} pair(s) failed")));
    }
    Ok(())
}

fn knowledge_backend(spec: &KnowledgeSpec) -> Result<Arc<dyn KnowledgeBackend>, CliError> {
    Ok(match spec {
        KnowledgeSpec::Cache(dir) => Arc::new(CachedCorpus::open(dir)?),
        KnowledgeSpec::Live(url) => {
            let url = match url {
                Some(u) => u.clone(),
                None => std::env::var(KNOWLEDGE_URL_ENV)
                    .map_err(|_| CliError::usage(format!("--knowledge live needs a URL or {KNOWLEDGE_URL_ENV}")))?,
            };
            Arc::new(HttpBackend::new(&url, Duration::from_secs(60), Duration::from_millis(200))?)
        }
    })
}

fn imaging_client(spec: &ImagingSpec, artifacts: &Path) -> Result<ImagingClient, CliError> {
    Ok(match spec {
        ImagingSpec::Stub => ImagingClient::stub(artifacts),
        ImagingSpec::Url(url) => {
            ImagingClient::new(Arc::new(RemoteBackend::new(url, Duration::from_secs(300))?), DEFAULT_INFLIGHT)
        }
    })
}

fn load_policy(spec: &PolicySpec, file: &FileConfig) -> Result<Box<dyn Policy>, CliError> {
    match spec {
        PolicySpec::Scripted(name) => {
            if let Some(p) = ScriptedPolicy::builtin(name) {
                return Ok(Box::new(p));
            }
            let path = Path::new(name);
            if !path.is_file() {
                return Err(CliError::usage(format!("no built-in script {name:?} and no such file")));
            }
            ScriptedPolicy::from_file(path)
                .map(|p| Box::new(p) as Box<dyn Policy>)
                .map_err(|e| CliError::domain(ErrorCode::MalformedInput, e.0))
        }
        PolicySpec::Llm(profile) => LlmPolicy::new(file.llm_config(profile)?)
            .map(|p| Box::new(p) as Box<dyn Policy>)
            .map_err(|e| CliError::domain(ErrorCode::BackendUnavailable, e.0)),
    }
}

struct Backends {
    policy_spec: PolicySpec,
    imaging: ImagingSpec,
    knowledge: KnowledgeSpec,
}

fn backends(
    policy: Option<&PolicySpec>,
    imaging: Option<&ImagingSpec>,
    knowledge: Option<&KnowledgeSpec>,
    file: &FileConfig,
    data: &Path,
) -> Result<Backends, CliError> {
    Ok(Backends {
        policy_spec: pick(policy.cloned(), file.policy.as_deref(), "policy")?
            .unwrap_or_else(|| PolicySpec::Scripted("demo".into())),
        imaging: pick(imaging.cloned(), file.imaging.as_deref(), "imaging")?.unwrap_or(ImagingSpec::Stub),
        knowledge: pick(knowledge.cloned(), file.knowledge.as_deref(), "knowledge")?
            .unwrap_or_else(|| KnowledgeSpec::Cache(data.join(KNOWLEDGE_DIR))),
    })
}

/// The task with relative image paths resolved against `data`.
fn resolve_images(task: &TaskInstance, data: &Path) -> TaskInstance {
    let mut t = task.clone();
    for img in &mut t.modality_meta {
        if img.path.is_relative() {
            img.path = data.join(&img.path);
        }
    }
    t
}

fn run_episodes(a: &RunArgs, file: &FileConfig, curated: bool) -> Result<(), CliError> {
    let data = data_root(a.data.as_ref(), file, Some(&a.benchmark));
    let parallelism = a.parallelism.or(file.parallelism).unwrap_or(DEFAULT_PARALLELISM);
    let max_rounds = a.max_rounds.or(file.max_rounds).unwrap_or(DEFAULT_MAX_ROUNDS);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let budget = RuntimeBudget {
        max_rounds,
        max_concurrent_episodes: parallelism,
        ..RuntimeBudget::default()
    };
    budget.validate().map_err(CliError::usage)?;
    let b = backends(a.policy.as_ref(), a.imaging.as_ref(), a.knowledge.as_ref(), file, &data)?;
    let policy = load_policy(&b.policy_spec, file)?;

    let mut pairs = read_benchmark(&a.benchmark)?;
    if let Some(n) = a.limit {
        pairs.truncate(n);
    }
    let store = Arc::new(EhrStore::open(&data.join(EHR_DIR))?);
    let artifacts = a.out.parent().unwrap_or(Path::new(".")).join("artifacts");
    let toolkit = Toolkit::new(store, knowledge_backend(&b.knowledge)?, imaging_client(&b.imaging, &artifacts)?);

    let specs: Vec<EpisodeSpec> = pairs
        .iter()
        .map(|p| {
            if curated {
                EpisodeSpec::curated(p.agentic.clone(), p.curated.context_text())
            } else {
                EpisodeSpec::agentic(p.agentic.clone())
            }
        })
        .collect();
    let registry_for = |spec: &EpisodeSpec| {
        if curated {
            toolkit.curated_registry(&spec.task)
        } else {
            toolkit.registry(&resolve_images(&spec.task, &data))
        }
    };
    let quiet = a.quiet;
    let on_event = |e: &clinseek_agent::ProgressEvent| {
        if !quiet {
            eprintln!("{}", e.to_json_line());
        }
    };
    let result = run_batch(&specs, policy.as_ref(), &registry_for, &budget, parallelism, &on_event);
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_trajectories(&a.out, &result.trajectories)?;
    let finished = result.trajectories.iter().filter(|t| t.termination == Termination::Finished).count();
    eprintln!(
        "{}",
        json!({
            "event": "batch_end",
            "setting": if curated { "curated" } else { "agentic" },
            "policy": policy.id(),
            "seed": seed,
            "episodes": result.trajectories.len(),
            "finished": finished,
            "parallelism": parallelism,
            "peak_in_flight": result.peak_in_flight,
            "wall_time_ms": result.wall_time_ms,
        })
    );
    Ok(())
}

fn gold_map(pairs: &[PairedExample]) -> HashMap<String, Vec<String>> {
    pairs
        .iter()
        .map(|p| (p.task_id().to_string(), p.gold_answers.clone()))
        .collect()
}

fn score_file(trajectories: &Path, gold: &HashMap<String, Vec<String>>) -> Result<(EvalReport, Vec<clinseek_eval::EvalRecord>), CliError> {
    let trajs = read_trajectories(trajectories)?;
    let records = score_trajectories(&trajs, gold)?;
    Ok((EvalReport::from_records(&records)?, records))
}

fn eval_score(a: &EvalScoreArgs) -> Result<(), CliError> {
    let gold = gold_map(&read_benchmark(&a.benchmark)?);
    let (report, records) = score_file(&a.trajectories, &gold)?;
    print!("{}", report.render_table());
    println!("digest: {}", report.digest());
    if let Some(out) = &a.out {
        write_text(out, &report.to_json())?;
    }
    if let Some(path) = &a.records {
        let lines: String = records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect();
        write_text(path, &lines)?;
    }
    Ok(())
}

fn eval_report(a: &EvalReportArgs) -> Result<(), CliError> {
    let gold = gold_map(&read_benchmark(&a.benchmark)?);
    let (agentic, _) = score_file(&a.agentic, &gold)?;
    let (curated, _) = score_file(&a.curated, &gold)?;
    let delta = delta_report(&agentic, &curated)?;
    print!("{}", delta.render_table());
    println!("agentic digest: {}", agentic.digest());
    println!("curated digest: {}", curated.digest());
    if let Some(out) = &a.out {
        let doc = json!({"agentic": agentic, "curated": curated, "delta": delta});
        write_text(out, &serde_json::to_string_pretty(&doc).expect("reports serialize"))?;
    }
    Ok(())
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<Trajectory>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_trajectories(p)?);
    }
    Ok(out)
}

fn eval_tools(a: &EvalToolsArgs) -> Result<(), CliError> {
    let usage = tool_usage(&read_all(&a.trajectories)?);
    print!("{}", usage.render_table());
    if let Some(out) = &a.out {
        write_text(out, &serde_json::to_string_pretty(&usage).expect("usage serializes"))?;
    }
    Ok(())
}

fn sft_export(a: &SftExportArgs) -> Result<(), CliError> {
    let tokenizer = tokenizer_by_name(&a.tokenizer).map_err(CliError::usage)?;
    let trajs = read_all(&a.trajectories)?;
    let gold = match (&a.benchmark, a.correct_only) {
        (Some(b), true) => Some(gold_map(&read_benchmark(b)?)),
        _ => None,
    };
    let options = ExportOptions {
        max_tokens: a.max_tokens,
        correct_only: gold.as_ref(),
    };
    let stats = export_dataset(&trajs, tokenizer.as_ref(), &options, &a.out)?;
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

fn doctor(a: &DoctorArgs, file: &FileConfig) -> Result<(), CliError> {
    let data = data_root(a.data.as_ref(), file, a.benchmark.as_deref());
    let b = backends(a.policy.as_ref(), a.imaging.as_ref(), a.knowledge.as_ref(), file, &data)?;
    let mut failures = 0;
    let mut check = |name: &str, outcome: Result<String, String>| match outcome {
        Ok(detail) => println!("[ok]   {name}: {detail}"),
        Err(detail) => {
            failures += 1;
            println!("[FAIL] {name}: {detail}");
        }
    };

    let store = EhrStore::open(&data.join(EHR_DIR));
    check(
        "ehr store",
        match &store {
            Ok(s) if s.patients().is_empty() => Err("no patients".into()),
            Ok(s) => Ok(format!("{} patients, {} tables", s.patients().len(), s.manifest().tables.len())),
            Err(e) => Err(e.to_string()),
        },
    );

    check(
        "knowledge",
        knowledge_backend(&b.knowledge)
            .map_err(|e| e.to_string())
            .and_then(|kb| kb.search("sepsis", 1).map_err(|e| e.to_string()))
            .map(|hits| format!("search answered with {} hit(s)", hits.len())),
    );

    let pairs = a.benchmark.as_ref().map(|p| read_benchmark(p));
    let first_image = match &pairs {
        Some(Ok(pairs)) => pairs.iter().flat_map(|p| &p.agentic.modality_meta).next().map(|i| data.join(&i.path)),
        _ => None,
    };
    let imaging = match &b.imaging {
        ImagingSpec::Url(url) => http_ok(&format!("{}/health", url.trim_end_matches('/'))),
        ImagingSpec::Stub => match &first_image {
            None => Ok("stub backend, no benchmark images to probe".into()),
            Some(path) => {
                let client = ImagingClient::stub(std::env::temp_dir().join("clinseek-doctor"));
                let req = ImageRequest {
                    image_path: Some(path.display().to_string()),
                    ..ImageRequest::default()
                };
                client
                    .chest_xray_classifier(&req)
                    .map(|_| format!("stub classified {}", path.display()))
                    .map_err(|e| e.to_string())
            }
        },
    };
    check("imaging", imaging);

    if let Some(pairs) = pairs {
        check(
            "benchmark",
            pairs.map_err(|e| e.to_string()).and_then(|pairs| {
                let store = store.as_ref().map_err(|e| e.to_string())?;
                let mut problems = Vec::new();
                for p in &pairs {
                    if !p.is_consistent() {
                        problems.push(format!("{}: settings disagree", p.task_id()));
                    }
                    if !store.has_patient(&p.agentic.patient_id) {
                        problems.push(format!("{}: unknown patient {}", p.task_id(), p.agentic.patient_id));
                    }
                    for img in &p.agentic.modality_meta {
                        if !data.join(&img.path).is_file() {
                            problems.push(format!("{}: missing image {}", p.task_id(), img.path.display()));
                        }
                    }
                }
                match problems.first() {
                    None => Ok(format!("{} pairs consistent, images present", pairs.len())),
                    Some(first) => Err(format!("{} problem(s), first: {first}", problems.len())),
                }
            }),
        );
    }

    let policy = match &b.policy_spec {
        PolicySpec::Scripted(_) => load_policy(&b.policy_spec, file).map(|p| p.id()).map_err(|e| e.to_string()),
        PolicySpec::Llm(profile) => file
            .llm_config(profile)
            .map_err(|e| e.to_string())
            .and_then(|c| http_ok(&format!("{}/models", c.endpoint.trim_end_matches('/')))),
    };
    check("policy", policy);

    if failures > 0 {
        return Err(CliError::domain("doctor_failed", format!("{failures} check(s) failed")));
    }
    Ok(())
}

fn http_ok(url: &str) -> Result<String, String> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(10))
        .build()
        .map_err(|e| e.to_string())?;
    let resp = client.get(url).send().map_err(|e| format!("{url}: {e}"))?;
    if resp.status().is_success() {
        Ok(format!("{url} answered {}", resp.status()))
    } else {
        Err(format!("{url} answered {}", resp.status()))
    }
}
