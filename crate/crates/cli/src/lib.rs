//! The `clinseek` command line.
//!
//! Exit codes: 0 on success, 1 on a domain error (the message carries the
//! error code), 2 on a usage error.

mod commands;
pub mod config;
mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::run_command;
pub use error::{CliError, EXIT_DOMAIN, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "clinseek", version, about = "Clinical evidence-seeking agent harness")]
pub struct Cli {
    /// TOML file with defaults for run settings and LLM profiles.
    #[arg(long, global = true, env = "CLINSEEK_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic fixture data.
    #[command(subcommand)]
    Fixture(FixtureCmd),
    /// Benchmark construction and checks.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Batch episodes over a benchmark.
    #[command(subcommand)]
    Run(RunCmd),
    /// Scoring and reports.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Training data export.
    #[command(subcommand)]
    Sft(SftCmd),
    /// Checks data, backends and endpoints before a long run.
    Doctor(DoctorArgs),
}

#[derive(Debug, Subcommand)]
pub enum FixtureCmd {
    /// Writes an EHR store, knowledge cache, images and curated examples.
    Gen(FixtureGenArgs),
}

#[derive(Debug, Args)]
pub struct FixtureGenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 60)]
    pub patients: usize,
    /// Events per patient.
    #[arg(long, default_value_t = 40)]
    pub events: usize,
    #[arg(long, default_value_t = 64)]
    pub images: usize,
    #[arg(long, default_value_t = clinseek_bench::synth::TEXT_SUBTASKS)]
    pub text_subtasks: usize,
    /// Curated text examples generated per subtask.
    #[arg(long, default_value_t = 48)]
    pub per_subtask: usize,
    /// Caps each multimodal group; the default keeps the reference sizes.
    #[arg(long)]
    pub multimodal_per_group: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum BenchCmd {
    /// Samples curated examples and pairs them with evidence-seeking tasks.
    Build(BenchBuildArgs),
    /// Checks every pair against the EHR store.
    Verify(BenchVerifyArgs),
}

#[derive(Debug, Args)]
pub struct BenchBuildArgs {
    /// Curated examples sampled with --quota.
    #[arg(long)]
    pub curated: Vec<PathBuf>,
    /// Curated examples kept whole.
    #[arg(long)]
    pub include: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to `<out>.manifest.toml`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Examples drawn per subtask.
    #[arg(long)]
    pub quota: Option<usize>,
    #[arg(long)]
    pub stratify: bool,
}

#[derive(Debug, Args)]
pub struct BenchVerifyArgs {
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Data root holding `ehr/`; defaults to the benchmark's directory.
    #[arg(long, env = "CLINSEEK_DATA")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RunCmd {
    /// Evidence-seeking episodes with the full tool space.
    Agentic(RunArgs),
    /// Curated-context episodes that may only finish.
    Curated(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Trajectory output file.
    #[arg(long)]
    pub out: PathBuf,
    /// scripted:<name|file.json> or llm:<profile>.
    #[arg(long, env = "CLINSEEK_POLICY")]
    pub policy: Option<config::PolicySpec>,
    #[arg(long, env = "CLINSEEK_PARALLELISM")]
    pub parallelism: Option<usize>,
    #[arg(long, env = "CLINSEEK_MAX_ROUNDS")]
    pub max_rounds: Option<usize>,
    /// Recorded with the run; scripted and stub runs are deterministic.
    #[arg(long, env = "CLINSEEK_SEED")]
    pub seed: Option<u64>,
    /// stub or an imaging service URL.
    #[arg(long, env = "CLINSEEK_IMAGING")]
    pub imaging: Option<config::ImagingSpec>,
    /// cache:<dir>, live or live:<url>.
    #[arg(long, env = "CLINSEEK_KNOWLEDGE")]
    pub knowledge: Option<config::KnowledgeSpec>,
    /// Data root holding `ehr/`, `knowledge/` and images; defaults to the
    /// benchmark's directory.
    #[arg(long, env = "CLINSEEK_DATA")]
    pub data: Option<PathBuf>,
    /// Only the first N benchmark examples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Suppress per-episode progress events.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Scores one trajectory file.
    Score(EvalScoreArgs),
    /// Compares evidence-seeking and curated runs.
    Report(EvalReportArgs),
    /// Per-tool call counts and shares.
    Tools(EvalToolsArgs),
}

#[derive(Debug, Args)]
pub struct EvalScoreArgs {
    #[arg(long)]
    pub trajectories: PathBuf,
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Report JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-sample records, one JSON object per line.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalReportArgs {
    #[arg(long)]
    pub agentic: PathBuf,
    #[arg(long)]
    pub curated: PathBuf,
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Delta report JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalToolsArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub trajectories: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SftCmd {
    /// Renders finished trajectories as chat samples within a token limit.
    Export(SftExportArgs),
}

#[derive(Debug, Args)]
pub struct SftExportArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub trajectories: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Samples longer than this are dropped; the limit itself is kept.
    #[arg(long, default_value_t = clinseek_sft::DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
    /// approx or whitespace.
    #[arg(long, default_value = "approx")]
    pub tokenizer: String,
    /// Keep only trajectories with F1 = 100; needs --benchmark.
    #[arg(long, requires = "benchmark")]
    pub correct_only: bool,
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DoctorArgs {
    /// Data root to check.
    #[arg(long, env = "CLINSEEK_DATA")]
    pub data: Option<PathBuf>,
    /// Benchmark whose pairs and image paths to check.
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long, env = "CLINSEEK_IMAGING")]
    pub imaging: Option<config::ImagingSpec>,
    #[arg(long, env = "CLINSEEK_KNOWLEDGE")]
    pub knowledge: Option<config::KnowledgeSpec>,
    #[arg(long, env = "CLINSEEK_POLICY")]
    pub policy: Option<config::PolicySpec>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run_command(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `clinseek --help` for the flag reference");
            }
            e.exit_code()
        }
    }
}
