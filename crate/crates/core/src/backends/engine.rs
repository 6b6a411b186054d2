use std::collections::HashMap;
use std::sync::Arc;

use super::cache::content_hash;
use super::{BackendError, ClaimSet, ClaimSplitter, EntailmentBackend, Label, NliPair, ResultCache, Verdict};

/// Fronts the entailment and claim-split backends with input conventions
/// and a result cache.
///
/// - An empty (or whitespace-only) premise is neutral without a backend call.
/// - With a premise limit, premises are cut to that many characters.
/// - Claim lists are trimmed, empty claims dropped, and an empty list is
///   replaced by the sentence itself.
#[derive(Clone)]
pub struct VerificationEngine {
    nli: Arc<dyn EntailmentBackend>,
    splitter: Arc<dyn ClaimSplitter>,
    cache: Option<Arc<ResultCache>>,
    premise_limit: Option<usize>,
    batch_size: usize,
}

impl std::fmt::Debug for VerificationEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VerificationEngine")
            .field("backend", &self.fingerprint())
            .field("cached", &self.cache.is_some())
            .field("premise_limit", &self.premise_limit)
            .finish()
    }
}

impl VerificationEngine {
    pub fn new(nli: Arc<dyn EntailmentBackend>, splitter: Arc<dyn ClaimSplitter>) -> Self {
        Self {
            nli,
            splitter,
            cache: None,
            premise_limit: None,
            batch_size: 64,
        }
    }

    /// One backend serving both roles.
    pub fn single<B: EntailmentBackend + ClaimSplitter + 'static>(backend: B) -> Self {
        let shared = Arc::new(backend);
        Self::new(shared.clone(), shared)
    }

    pub fn with_cache(mut self, cache: Arc<ResultCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_premise_limit(mut self, limit: Option<usize>) -> Self {
        self.premise_limit = limit;
        self
    }

    pub fn with_batch_size(mut self, size: usize) -> Self {
        self.batch_size = size.max(1);
        self
    }

    pub fn cache(&self) -> Option<&Arc<ResultCache>> {
        self.cache.as_ref()
    }

    pub fn fingerprint(&self) -> String {
        format!("{}|{}", self.nli.fingerprint(), self.splitter.fingerprint())
    }

    fn prepare_premise<'a>(&self, premise: &'a str) -> std::borrow::Cow<'a, str> {
        match self.premise_limit {
            Some(limit) => match premise.char_indices().nth(limit) {
                Some((cut, _)) => {
                    tracing::warn!(limit, chars = premise.chars().count(), "premise truncated");
                    premise[..cut].into()
                }
                None => premise.into(),
            },
            None => premise.into(),
        }
    }

    pub fn classify(&self, premise: &str, hypothesis: &str) -> Result<Verdict, BackendError> {
        Ok(self.classify_batch(&[NliPair::new(premise, hypothesis)])?[0])
    }

    pub fn entails(&self, premise: &str, hypothesis: &str) -> Result<bool, BackendError> {
        Ok(self.classify(premise, hypothesis)?.is_entailment())
    }

    pub fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<Verdict>, BackendError> {
        let mut out: Vec<Option<Verdict>> = vec![None; pairs.len()];
        // distinct cache keys still to fetch, with the positions waiting on them
        let mut pending: Vec<(NliPair, (String, String))> = Vec::new();
        let mut waiting: HashMap<(String, String), Vec<usize>> = HashMap::new();

        for (i, pair) in pairs.iter().enumerate() {
            if pair.hypothesis.trim().is_empty() {
                return Err(BackendError::InvalidInput("empty hypothesis".into()));
            }
            let premise = self.prepare_premise(&pair.premise);
            if premise.trim().is_empty() {
                out[i] = Some(Verdict::new(Label::Neutral));
                continue;
            }
            let key = (content_hash(&premise), content_hash(&pair.hypothesis));
            if let Some(v) = self.cache.as_ref().and_then(|c| c.verdict(&key)) {
                out[i] = Some(v);
                continue;
            }
            let slot = waiting.entry(key.clone()).or_default();
            if slot.is_empty() {
                pending.push((NliPair::new(premise.into_owned(), pair.hypothesis.clone()), key));
            }
            slot.push(i);
        }

        for chunk in pending.chunks(self.batch_size) {
            let batch: Vec<NliPair> = chunk.iter().map(|(p, _)| p.clone()).collect();
            let verdicts = self.nli.classify_batch(&batch)?;
            if verdicts.len() != batch.len() {
                return Err(BackendError::Protocol(format!(
                    "backend returned {} verdicts for {} pairs",
                    verdicts.len(),
                    batch.len()
                )));
            }
            for ((_, key), v) in chunk.iter().zip(verdicts) {
                for &i in &waiting[key] {
                    out[i] = Some(v);
                }
                if let Some(c) = &self.cache {
                    c.put_verdict(key.clone(), v);
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("every pair resolved")).collect())
    }

    pub fn split(&self, sentence: &str) -> Result<ClaimSet, BackendError> {
        Ok(self.split_batch(&[sentence.to_string()])?.remove(0))
    }

    pub fn split_batch(&self, sentences: &[String]) -> Result<Vec<ClaimSet>, BackendError> {
        let mut out: Vec<Option<Vec<String>>> = vec![None; sentences.len()];
        let mut pending: Vec<(String, String)> = Vec::new();
        let mut waiting: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, s) in sentences.iter().enumerate() {
            if s.trim().is_empty() {
                return Err(BackendError::InvalidInput("empty sentence".into()));
            }
            let key = content_hash(s);
            if let Some(c) = self.cache.as_ref().and_then(|c| c.claims(&key)) {
                out[i] = Some(c);
                continue;
            }
            let slot = waiting.entry(key.clone()).or_default();
            if slot.is_empty() {
                pending.push((s.clone(), key));
            }
            slot.push(i);
        }
        for chunk in pending.chunks(self.batch_size) {
            let batch: Vec<String> = chunk.iter().map(|(s, _)| s.clone()).collect();
            let lists = self.splitter.split_batch(&batch)?;
            if lists.len() != batch.len() {
                return Err(BackendError::Protocol(format!(
                    "backend returned {} claim lists for {} sentences",
                    lists.len(),
                    batch.len()
                )));
            }
            for ((sentence, key), raw) in chunk.iter().zip(lists) {
                let mut claims: Vec<String> = raw
                    .into_iter()
                    .map(|c| c.trim().to_string())
                    .filter(|c| !c.is_empty())
                    .collect();
                if claims.is_empty() {
                    tracing::warn!(sentence = %sentence, "empty claim split; using the sentence itself");
                    claims.push(sentence.trim().to_string());
                }
                for &i in &waiting[key] {
                    out[i] = Some(claims.clone());
                }
                if let Some(c) = &self.cache {
                    c.put_claims(key.clone(), claims);
                }
            }
        }
        Ok(sentences
            .iter()
            .zip(out)
            .map(|(s, c)| ClaimSet {
                source: s.clone(),
                claims: c.expect("every sentence resolved"),
            })
            .collect())
    }
}
