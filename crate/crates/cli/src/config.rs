//! Run settings resolved from flags, environment and an optional TOML file,
//! in that order of precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clinseek_agent::LlmConfig;
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_PARALLELISM: usize = 6;
pub const DEFAULT_MAX_ROUNDS: usize = 200;
/// Environment variable read for the model API key when a profile names none.
pub const API_KEY_ENV: &str = "CLINSEEK_API_KEY";

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub max_rounds: Option<usize>,
    pub policy: Option<String>,
    pub imaging: Option<String>,
    pub knowledge: Option<String>,
    #[serde(default)]
    pub llm: BTreeMap<String, LlmProfile>,
}

/// A named chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LlmProfile {
    #[serde(flatten)]
    pub config: LlmConfig,
    /// Environment variable holding the API key.
    pub api_key_env: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn llm_config(&self, profile: &str) -> Result<LlmConfig, CliError> {
        let p = self
            .llm
            .get(profile)
            .ok_or_else(|| CliError::usage(format!("no [llm.{profile}] section in the config file")))?;
        let mut config = p.config.clone();
        let var = p.api_key_env.as_deref().unwrap_or(API_KEY_ENV);
        if let Ok(key) = std::env::var(var) {
            config.api_key = Some(key);
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    /// A built-in script name or a path to a JSON script file.
    Scripted(String),
    /// A profile from the config file.
    Llm(String),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("scripted", name)) if !name.is_empty() => Ok(PolicySpec::Scripted(name.into())),
            Some(("llm", profile)) if !profile.is_empty() => Ok(PolicySpec::Llm(profile.into())),
            _ => Err(format!("expected scripted:<name> or llm:<profile>, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImagingSpec {
    Stub,
    Url(String),
}

impl FromStr for ImagingSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stub" {
            Ok(ImagingSpec::Stub)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(ImagingSpec::Url(s.into()))
        } else {
            Err(format!("expected stub or an http(s) URL, got {s:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KnowledgeSpec {
    Cache(PathBuf),
    /// `live` alone reads the base URL from `CLINSEEK_KNOWLEDGE_URL`.
    Live(Option<String>),
}

pub const KNOWLEDGE_URL_ENV: &str = "CLINSEEK_KNOWLEDGE_URL";

impl FromStr for KnowledgeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("cache", dir)) if !dir.is_empty() => Ok(KnowledgeSpec::Cache(dir.into())),
            Some(("live", url)) if !url.is_empty() => Ok(KnowledgeSpec::Live(Some(url.into()))),
            None if s == "live" => Ok(KnowledgeSpec::Live(None)),
            _ => Err(format!("expected cache:<dir>, live or live:<url>, got {s:?}")),
        }
    }
}

/// Flag or environment value first, then the file, then the default.
pub fn pick<T: FromStr>(flag: Option<T>, file: Option<&str>, what: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match (flag, file) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(s)) => s
            .parse()
            .map(Some)
            .map_err(|e| CliError::usage(format!("config {what}: {e}"))),
        (None, None) => Ok(None),
    }
}
