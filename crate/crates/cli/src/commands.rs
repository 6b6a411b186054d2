//! The `stats`, `chunk`, `agreement` and `claimsplit-quality` workflows.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use attrib_eval::corpus::{chunk_sample, corpus_stats, write_dataset, CorpusStats, Sample};
use attrib_eval::metrics::agreement::{aggregate_agreement, human_agreement, AgreementReport};
use attrib_eval::metrics::{claimsplit_quality, ClaimSplitQuality};
use attrib_eval::segmenter::{segment_summary, MarkerGrammar};
use attrib_eval::verifier::MaskPolicy;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_file, resolve, CommonArgs, Resolved};
use crate::engine::{build_engine, grammar, load, persist_cache, pool};

fn settings(common: &CommonArgs, env_endpoint: Option<String>) -> Result<Resolved> {
    resolve(common, &load_file(common)?, env_endpoint)
}

/// Print JSON to stdout or write it to `out`.
pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct StatsArgs {
    /// Dataset file; repeat for several splits.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileStats {
    pub path: String,
    pub stats: CorpusStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub files: Vec<FileStats>,
    pub total: CorpusStats,
}

fn maybe_chunk(samples: Vec<Sample>, max_doc_len: Option<usize>) -> Vec<Sample> {
    match max_doc_len {
        Some(n) => samples.iter().map(|s| chunk_sample(s, n)).collect(),
        None => samples,
    }
}

pub fn stats_report(inputs: &[PathBuf], settings: &Resolved) -> Result<StatsReport> {
    let grammar = grammar(settings)?;
    let mut files = Vec::new();
    let mut all = Vec::new();
    for path in inputs {
        let samples = maybe_chunk(load(path, settings, &grammar)?, settings.max_doc_len);
        let stats = corpus_stats(&samples, &grammar).with_context(|| path.display().to_string())?;
        files.push(FileStats {
            path: path.display().to_string(),
            stats,
        });
        all.extend(samples);
    }
    Ok(StatsReport {
        files,
        total: corpus_stats(&all, &grammar)?,
    })
}

pub fn run_stats(args: &StatsArgs, env_endpoint: Option<String>) -> Result<()> {
    let s = settings(&args.common, env_endpoint)?;
    emit(&stats_report(&args.inputs, &s)?, args.out.as_deref())
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChunkArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Chunked dataset, JSON lines.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run_chunk(args: &ChunkArgs, env_endpoint: Option<String>) -> Result<()> {
    let s = settings(&args.common, env_endpoint)?;
    let Some(max_len) = s.max_doc_len else {
        bail!("chunk needs --max-doc-len");
    };
    let grammar = grammar(&s)?;
    let samples = maybe_chunk(load(&args.input, &s, &grammar)?, Some(max_len));
    write_dataset(&args.output, &samples).with_context(|| format!("writing {}", args.output.display()))
}

#[derive(Debug, Clone, Default, Args)]
pub struct AgreementArgs {
    /// Dataset whose reference summaries carry human citations.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Which sentences take part.
    #[arg(long, default_value = "human", value_name = "default|auto|human")]
    pub mask_policy: MaskPolicy,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn agreement_report(
    samples: &[Sample],
    grammar: &MarkerGrammar,
    settings: &Resolved,
    policy: MaskPolicy,
) -> Result<AgreementReport> {
    let engine = build_engine(settings)?;
    let rows = pool(settings.jobs)?.install(|| {
        samples
            .par_iter()
            .map(|s| human_agreement(s, grammar, &engine, policy).with_context(|| format!("sample {}", s.sample_id)))
            .collect::<Result<Vec<_>>>()
    })?;
    persist_cache(&engine)?;
    Ok(aggregate_agreement(policy, &rows))
}

pub fn run_agreement(args: &AgreementArgs, env_endpoint: Option<String>) -> Result<()> {
    let s = settings(&args.common, env_endpoint)?;
    if s.max_doc_len.is_some() {
        bail!("agreement compares against human citations and cannot re-chunk documents");
    }
    let grammar = grammar(&s)?;
    let samples = load(&args.dataset, &s, &grammar)?;
    emit(&agreement_report(&samples, &grammar, &s, args.mask_policy)?, args.out.as_deref())
}

#[derive(Debug, Clone, Default, Args)]
pub struct ClaimSplitArgs {
    /// Take the sentences of these reference summaries.
    #[arg(long, conflicts_with = "sentences")]
    pub dataset: Option<PathBuf>,
    /// Plain-text file, one sentence per line.
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run_claimsplit(args: &ClaimSplitArgs, env_endpoint: Option<String>) -> Result<()> {
    let s = settings(&args.common, env_endpoint)?;
    let sentences: Vec<String> = match (&args.dataset, &args.sentences) {
        (Some(d), None) => {
            let grammar = grammar(&s)?;
            load(d, &s, &grammar)?
                .iter()
                .flat_map(|x| segment_summary(&x.summary_markup, &grammar).sentences)
                .map(|x| x.text)
                .collect()
        }
        (None, Some(p)) => std::fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
        _ => bail!("pass exactly one of --dataset or --sentences"),
    };
    let engine = build_engine(&s)?;
    let q: ClaimSplitQuality = claimsplit_quality(&sentences, &engine)?;
    persist_cache(&engine)?;
    emit(&q, args.out.as_deref())
}
