use std::sync::Arc;

use anyhow::{Context, Result};
use attrib_eval::backends::{RemoteBackend, ResultCache, TableOracle, VerificationEngine};
use attrib_eval::corpus::{load_dataset, DatasetSchema, Sample};
use attrib_eval::segmenter::MarkerGrammar;

use crate::config::{BackendSource, Resolved};

/// Build the verification engine; a remote backend must answer its
/// health check first.
pub fn build_engine(settings: &Resolved) -> Result<VerificationEngine> {
    let engine = match settings.backend()? {
        BackendSource::Oracle(path) => {
            let oracle = TableOracle::load(path).with_context(|| format!("loading oracle {}", path.display()))?;
            VerificationEngine::single(oracle)
        }
        BackendSource::Endpoint(url) => {
            let remote = RemoteBackend::new(settings.remote.to_config(url))?;
            let health = remote.health().with_context(|| format!("backend unreachable at {url}"))?;
            tracing::info!(status = %health.status, models = ?health.models, "sidecar healthy");
            VerificationEngine::single(remote)
        }
    }
    .with_premise_limit(settings.premise_limit);
    match &settings.cache {
        Some(dir) => {
            let cache = ResultCache::open(dir, &engine.fingerprint())
                .with_context(|| format!("opening cache {}", dir.display()))?;
            Ok(engine.with_cache(Arc::new(cache)))
        }
        None => Ok(engine),
    }
}

pub fn persist_cache(engine: &VerificationEngine) -> Result<()> {
    if let Some(c) = engine.cache() {
        c.persist().context("writing cache")?;
    }
    Ok(())
}

pub fn grammar(settings: &Resolved) -> Result<MarkerGrammar> {
    MarkerGrammar::new(&settings.markers).context("marker grammar")
}

pub fn schema(settings: &Resolved) -> Result<DatasetSchema> {
    let s = DatasetSchema::from_descriptor(&settings.schema)?;
    Ok(match &settings.doc_field {
        Some(f) => s.prefer_doc_text(f),
        None => s,
    })
}

pub fn load(path: &std::path::Path, settings: &Resolved, grammar: &MarkerGrammar) -> Result<Vec<Sample>> {
    Ok(load_dataset(path, &schema(settings)?, grammar)?)
}

pub fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")
}
