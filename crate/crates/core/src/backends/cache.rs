use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, Verdict};

/// Content-addressed store of entailment verdicts and claim splits,
/// optionally persisted as JSON lines under a per-backend directory.
#[derive(Debug, Default)]
pub struct ResultCache {
    nli: RwLock<HashMap<(String, String), Verdict>>,
    claims: RwLock<HashMap<String, Vec<String>>>,
    dir: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct NliEntry {
    premise: String,
    hypothesis: String,
    verdict: Verdict,
}

#[derive(Serialize, Deserialize)]
struct ClaimEntry {
    sentence: String,
    claims: Vec<String>,
}

pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> BackendError {
    BackendError::Cache(format!("{}: {e}", path.display()))
}

impl ResultCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open (or create) the cache for `namespace` under `root`. Entries
    /// already on disk are loaded.
    pub fn open(root: &Path, namespace: &str) -> Result<Self, BackendError> {
        let dir = root.join(&content_hash(namespace)[..16]);
        fs::create_dir_all(&dir).map_err(|e| cache_err(&dir, e))?;
        fs::write(dir.join("namespace"), namespace).map_err(|e| cache_err(&dir, e))?;
        let cache = Self {
            dir: Some(dir.clone()),
            ..Self::default()
        };
        for (name, is_nli) in [("nli.jsonl", true), ("claims.jsonl", false)] {
            let path = dir.join(name);
            let Ok(file) = fs::File::open(&path) else { continue };
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| cache_err(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                if is_nli {
                    let e: NliEntry = serde_json::from_str(&line).map_err(|e| cache_err(&path, e))?;
                    cache.nli.write().insert((e.premise, e.hypothesis), e.verdict);
                } else {
                    let e: ClaimEntry = serde_json::from_str(&line).map_err(|e| cache_err(&path, e))?;
                    cache.claims.write().insert(e.sentence, e.claims);
                }
            }
        }
        Ok(cache)
    }

    pub fn len(&self) -> usize {
        self.nli.read().len() + self.claims.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn verdict(&self, key: &(String, String)) -> Option<Verdict> {
        self.nli.read().get(key).copied()
    }

    pub(crate) fn put_verdict(&self, key: (String, String), verdict: Verdict) {
        self.nli.write().entry(key).or_insert(verdict);
    }

    pub(crate) fn claims(&self, key: &str) -> Option<Vec<String>> {
        self.claims.read().get(key).cloned()
    }

    pub(crate) fn put_claims(&self, key: String, claims: Vec<String>) {
        self.claims.write().entry(key).or_insert(claims);
    }

    /// Write all entries, sorted by key. No-op for an in-memory cache.
    pub fn persist(&self) -> Result<(), BackendError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join("nli.jsonl");
        let mut out = BufWriter::new(fs::File::create(&path).map_err(|e| cache_err(&path, e))?);
        let nli = self.nli.read();
        let mut keys: Vec<_> = nli.keys().collect();
        keys.sort();
        for k in keys {
            let e = NliEntry { premise: k.0.clone(), hypothesis: k.1.clone(), verdict: nli[k] };
            serde_json::to_writer(&mut out, &e).map_err(|e| cache_err(&path, e))?;
            out.write_all(b"\n").map_err(|e| cache_err(&path, e))?;
        }
        out.flush().map_err(|e| cache_err(&path, e))?;

        let path = dir.join("claims.jsonl");
        let mut out = BufWriter::new(fs::File::create(&path).map_err(|e| cache_err(&path, e))?);
        let claims = self.claims.read();
        let mut keys: Vec<_> = claims.keys().collect();
        keys.sort();
        for k in keys {
            let e = ClaimEntry { sentence: k.clone(), claims: claims[k].clone() };
            serde_json::to_writer(&mut out, &e).map_err(|e| cache_err(&path, e))?;
            out.write_all(b"\n").map_err(|e| cache_err(&path, e))?;
        }
        out.flush().map_err(|e| cache_err(&path, e))
    }
}
