//! Run configuration: command-line flags over a TOML config file over the
//! environment.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use attrib_eval::backends::RemoteConfig;
use attrib_eval::segmenter::MarkerConfig;
use attrib_eval::verifier::MaskPolicy;
use clap::Args;
use serde::Deserialize;

pub const ENDPOINT_ENV: &str = "ATTRIB_EVAL_ENDPOINT";

/// Where verdicts and claim splits come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSource {
    Oracle(PathBuf),
    Endpoint(String),
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RemoteSettings {
    pub max_batch: Option<usize>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
}

impl RemoteSettings {
    pub fn to_config(&self, endpoint: &str) -> RemoteConfig {
        let mut c = RemoteConfig::new(endpoint);
        if let Some(n) = self.max_batch {
            c.max_batch = n;
        }
        if let Some(n) = self.max_retries {
            c.max_retries = n;
        }
        if let Some(s) = self.timeout_secs {
            c.timeout = Duration::from_secs(s);
        }
        c
    }
}

/// Contents of `--config FILE`. Keys mirror the long flag names with
/// underscores.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub schema: Option<String>,
    pub doc_field: Option<String>,
    pub mask_policy: Option<MaskPolicy>,
    pub oracle: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub max_doc_len: Option<usize>,
    pub premise_limit: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub markers: Option<MarkerConfig>,
    #[serde(default)]
    pub remote: RemoteSettings,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&raw).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Backend and input options shared by every subcommand that needs them.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Oracle fixture (JSON table of verdicts and claim splits).
    #[arg(long, conflicts_with = "endpoint")]
    pub oracle: Option<PathBuf>,
    /// Inference sidecar base URL. Defaults to $ATTRIB_EVAL_ENDPOINT.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Directory for the persistent verdict cache.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Dataset field names: `canonical`, `webcites`, or a TOML schema file.
    #[arg(long)]
    pub schema: Option<String>,
    /// Document field to use as premise text (e.g. `snippet`, `content`).
    #[arg(long)]
    pub doc_field: Option<String>,
    /// Re-chunk document content into passages of at most N characters.
    #[arg(long)]
    pub max_doc_len: Option<usize>,
    /// Truncate premises to their first N characters before verification.
    #[arg(long)]
    pub premise_limit: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Settings resolved from every source.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub backend: Option<BackendSource>,
    pub remote: RemoteSettings,
    pub cache: Option<PathBuf>,
    pub schema: String,
    pub doc_field: Option<String>,
    pub markers: MarkerConfig,
    pub max_doc_len: Option<usize>,
    pub premise_limit: Option<usize>,
    pub jobs: usize,
}

impl Resolved {
    pub fn backend(&self) -> Result<&BackendSource> {
        match &self.backend {
            Some(b) => Ok(b),
            None => bail!("no backend configured: pass --oracle FILE or --endpoint URL (or set {ENDPOINT_ENV})"),
        }
    }
}

fn level(oracle: Option<&PathBuf>, endpoint: Option<&String>, source: &str) -> Result<Option<BackendSource>> {
    match (oracle, endpoint) {
        (Some(_), Some(_)) => bail!("{source} names both an oracle and an endpoint; configure exactly one backend"),
        (Some(o), None) => Ok(Some(BackendSource::Oracle(o.clone()))),
        (None, Some(e)) => Ok(Some(BackendSource::Endpoint(e.clone()))),
        (None, None) => Ok(None),
    }
}

/// The backend comes from the highest-precedence source that names one.
pub fn resolve(args: &CommonArgs, file: &FileConfig, env_endpoint: Option<String>) -> Result<Resolved> {
    let backend = match level(args.oracle.as_ref(), args.endpoint.as_ref(), "the command line")? {
        Some(b) => Some(b),
        None => match level(file.oracle.as_ref(), file.endpoint.as_ref(), "the config file")? {
            Some(b) => Some(b),
            None => env_endpoint.filter(|e| !e.is_empty()).map(BackendSource::Endpoint),
        },
    };
    let jobs = args
        .jobs
        .or(file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let max_doc_len = args.max_doc_len.or(file.max_doc_len);
    if max_doc_len == Some(0) {
        bail!("--max-doc-len must be at least 1");
    }
    Ok(Resolved {
        backend,
        remote: file.remote.clone(),
        cache: args.cache.clone().or_else(|| file.cache.clone()),
        schema: args.schema.clone().or_else(|| file.schema.clone()).unwrap_or_else(|| "canonical".into()),
        doc_field: args.doc_field.clone().or_else(|| file.doc_field.clone()),
        markers: file.markers.clone().unwrap_or_default(),
        max_doc_len,
        premise_limit: args.premise_limit.or(file.premise_limit),
        jobs,
    })
}

pub fn load_file(args: &CommonArgs) -> Result<FileConfig> {
    match &args.config {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

/// Everything `evaluate` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub predictions: Option<PathBuf>,
    pub mask_policy: MaskPolicy,
    pub out: PathBuf,
    pub table: bool,
    pub settings: Resolved,
}
