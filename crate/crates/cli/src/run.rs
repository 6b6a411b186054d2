//! The `evaluate` workflow.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use attrib_eval::metrics::{aggregate, evaluate_sample, EvalConfig, SampleReport};
use attrib_eval::verifier::MaskPolicy;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{load_file, resolve, CommonArgs, RunConfig};
use crate::engine::{build_engine, grammar, load, persist_cache, pool};

#[derive(Debug, Clone, Default, Args)]
pub struct EvaluateArgs {
    /// Dataset with queries, documents and reference summaries.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// System summaries as JSON lines keyed by sample id. Without it the
    /// reference summaries are evaluated.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Which sentences are scored for citations [default: auto].
    #[arg(long, value_name = "default|auto|human")]
    pub mask_policy: Option<MaskPolicy>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also print the corpus table.
    #[arg(long)]
    pub table: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

impl EvaluateArgs {
    pub fn resolve(&self, env_endpoint: Option<String>) -> Result<RunConfig> {
        let file = load_file(&self.common)?;
        let settings = resolve(&self.common, &file, env_endpoint)?;
        let Some(dataset) = self.dataset.clone().or(file.dataset.clone()) else {
            bail!("--dataset is required");
        };
        Ok(RunConfig {
            dataset,
            predictions: self.predictions.clone().or(file.predictions.clone()),
            mask_policy: self.mask_policy.or(file.mask_policy).unwrap_or_default(),
            out: self.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("attrib-eval-out")),
            table: self.table,
            settings,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Partial,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Partial => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailedSample {
    pub sample_id: String,
    pub error: String,
}

/// Machine-readable summary written to `run_status.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunStatus {
    pub status: Status,
    pub mask_policy: MaskPolicy,
    pub samples: usize,
    pub evaluated: usize,
    /// Samples without a prediction.
    pub skipped: Vec<String>,
    pub failed: Vec<FailedSample>,
    /// Predictions whose id matches no sample.
    pub unmatched_predictions: Vec<String>,
    pub backend: Option<String>,
    pub error: Option<String>,
}

impl RunStatus {
    fn fatal(policy: MaskPolicy, error: &anyhow::Error) -> Self {
        Self {
            status: Status::Failed,
            mask_policy: policy,
            samples: 0,
            evaluated: 0,
            skipped: vec![],
            failed: vec![],
            unmatched_predictions: vec![],
            backend: None,
            error: Some(format!("{error:#}")),
        }
    }
}

/// System summaries keyed by sample id. Accepts `sample_id` or `id` for
/// the key and `summary`, `output` or `prediction` for the text.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values: Vec<(usize, Value)> = if raw.trim_start().starts_with('[') {
        let v: Vec<Value> = serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        v.into_iter().enumerate().map(|(i, v)| (i + 1, v)).collect()
    } else {
        raw.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .with_context(|| format!("{} line {}", path.display(), i + 1))
                    .map(|v| (i + 1, v))
            })
            .collect::<Result<_>>()?
    };
    let mut out = BTreeMap::new();
    for (line, v) in values {
        let field = |keys: &[&str]| {
            keys.iter().find_map(|k| match v.get(*k) {
                Some(Value::String(s)) => Some(s.clone()),
                Some(Value::Number(n)) => Some(n.to_string()),
                _ => None,
            })
        };
        let (Some(id), Some(text)) = (field(&["sample_id", "id"]), field(&["summary", "output", "prediction"])) else {
            bail!("{} line {line}: prediction needs an id and a summary", path.display());
        };
        if out.insert(id.clone(), text).is_some() {
            bail!("{} line {line}: duplicate prediction for `{id}`", path.display());
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Run an evaluation and write `samples.jsonl`, `corpus.json` and
/// `run_status.json` into the output directory. Fatal errors still
/// produce a status file when the output directory is writable.
pub fn run_evaluate(cfg: &RunConfig) -> RunStatus {
    let status = match execute(cfg) {
        Ok(s) => s,
        Err(e) => {
            tracing::error!("{e:#}");
            RunStatus::fatal(cfg.mask_policy, &e)
        }
    };
    if fs::create_dir_all(&cfg.out).is_ok() {
        if let Err(e) = write_json(&cfg.out.join("run_status.json"), &status) {
            tracing::error!("{e:#}");
        }
    }
    status
}

fn execute(cfg: &RunConfig) -> Result<RunStatus> {
    let grammar = grammar(&cfg.settings)?;
    let samples = load(&cfg.dataset, &cfg.settings, &grammar)?;
    let predictions = match &cfg.predictions {
        Some(p) => Some(load_predictions(p)?),
        None => None,
    };
    let engine = build_engine(&cfg.settings)?;
    let eval = EvalConfig {
        policy: cfg.mask_policy,
        grammar,
        max_doc_len: cfg.settings.max_doc_len,
    };

    let mut skipped = Vec::new();
    let mut work = Vec::new();
    for s in &samples {
        match &predictions {
            None => work.push((s, s.summary_markup.as_str())),
            Some(p) => match p.get(&s.sample_id) {
                Some(text) => work.push((s, text.as_str())),
                None => {
                    tracing::warn!(sample_id = %s.sample_id, "no prediction; sample skipped");
                    skipped.push(s.sample_id.clone());
                }
            },
        }
    }
    let unmatched: Vec<String> = match &predictions {
        Some(p) => {
            let ids: BTreeSet<&str> = samples.iter().map(|s| s.sample_id.as_str()).collect();
            p.keys().filter(|k| !ids.contains(k.as_str())).cloned().collect()
        }
        None => vec![],
    };

    let results: Vec<_> = pool(cfg.settings.jobs)?.install(|| {
        work.par_iter()
            .map(|(s, text)| evaluate_sample(s, text, &engine, &eval))
            .collect()
    });
    persist_cache(&engine)?;

    let mut reports: Vec<SampleReport> = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                tracing::error!("{e}");
                failed.push(FailedSample {
                    sample_id: e.sample_id.clone(),
                    error: e.source.to_string(),
                });
            }
        }
    }
    reports.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    failed.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    skipped.sort();

    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut lines = Vec::new();
    for r in &reports {
        serde_json::to_writer(&mut lines, r)?;
        lines.write_all(b"\n")?;
    }
    fs::write(cfg.out.join("samples.jsonl"), lines).context("writing samples.jsonl")?;
    let corpus_path = cfg.out.join("corpus.json");
    if reports.is_empty() {
        let _ = fs::remove_file(&corpus_path);
    } else {
        let corpus = aggregate(&reports)?;
        write_json(&corpus_path, &corpus)?;
        if cfg.table {
            let table = corpus.render_table(&cfg.mask_policy.to_string());
            print!("{table}");
            fs::write(cfg.out.join("table.txt"), table).context("writing table.txt")?;
        }
    }

    let status = if reports.is_empty() {
        Status::Failed
    } else if skipped.is_empty() && failed.is_empty() {
        Status::Ok
    } else {
        Status::Partial
    };
    Ok(RunStatus {
        status,
        mask_policy: cfg.mask_policy,
        samples: samples.len(),
        evaluated: reports.len(),
        skipped,
        failed,
        unmatched_predictions: unmatched,
        backend: Some(engine.fingerprint()),
        error: None,
    })
}
