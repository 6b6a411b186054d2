use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use super::{BackendError, ClaimSplitter, EntailmentBackend, Label, NliPair, Verdict};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Unknown pairs and sentences are errors.
    Strict,
    /// Unknown pairs are neutral; unknown sentences are their own claim.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixturePair {
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureClaims {
    pub sentence: String,
    pub claims: Vec<String>,
}

/// On-disk oracle table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    #[serde(default)]
    pub mode: OracleMode,
    #[serde(default)]
    pub nli: Vec<FixturePair>,
    #[serde(default)]
    pub claims: Vec<FixtureClaims>,
}

/// Table-driven entailment and claim-split oracle. Keys are NFC-normalized
/// and trimmed; a premise identical to its hypothesis always entails it.
#[derive(Debug, Clone, Default)]
pub struct TableOracle {
    mode: OracleMode,
    nli: HashMap<(String, String), Label>,
    claims: HashMap<String, Vec<String>>,
}

pub(crate) fn normalize(s: &str) -> String {
    s.trim().nfc().collect()
}

impl TableOracle {
    pub fn new(mode: OracleMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn from_fixture(fixture: OracleFixture) -> Result<Self, BackendError> {
        let mut oracle = Self::new(fixture.mode);
        for p in fixture.nli {
            let key = (normalize(&p.premise), normalize(&p.hypothesis));
            if let Some(prev) = oracle.nli.insert(key, p.label) {
                if prev != p.label {
                    return Err(BackendError::Fixture(format!(
                        "conflicting labels for premise {:?} / hypothesis {:?}",
                        p.premise, p.hypothesis
                    )));
                }
            }
        }
        for c in fixture.claims {
            let key = normalize(&c.sentence);
            if let Some(prev) = oracle.claims.insert(key, c.claims.clone()) {
                if prev != c.claims {
                    return Err(BackendError::Fixture(format!(
                        "conflicting claim lists for {:?}",
                        c.sentence
                    )));
                }
            }
        }
        Ok(oracle)
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Fixture(format!("{}: {e}", path.display())))?;
        let fixture: OracleFixture = serde_json::from_str(&raw)
            .map_err(|e| BackendError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_fixture(fixture)
    }

    pub fn to_fixture(&self) -> OracleFixture {
        let mut nli: Vec<FixturePair> = self
            .nli
            .iter()
            .map(|((p, h), &label)| FixturePair {
                premise: p.clone(),
                hypothesis: h.clone(),
                label,
            })
            .collect();
        nli.sort_by(|a, b| (&a.premise, &a.hypothesis).cmp(&(&b.premise, &b.hypothesis)));
        let mut claims: Vec<FixtureClaims> = self
            .claims
            .iter()
            .map(|(s, c)| FixtureClaims {
                sentence: s.clone(),
                claims: c.clone(),
            })
            .collect();
        claims.sort_by(|a, b| a.sentence.cmp(&b.sentence));
        OracleFixture {
            mode: self.mode,
            nli,
            claims,
        }
    }

    pub fn insert_pair(&mut self, premise: &str, hypothesis: &str, label: Label) {
        self.nli
            .insert((normalize(premise), normalize(hypothesis)), label);
    }

    pub fn insert_claims<S: Into<String>>(&mut self, sentence: &str, claims: impl IntoIterator<Item = S>) {
        self.claims.insert(
            normalize(sentence),
            claims.into_iter().map(Into::into).collect(),
        );
    }

    pub fn with_pair(mut self, premise: &str, hypothesis: &str, label: Label) -> Self {
        self.insert_pair(premise, hypothesis, label);
        self
    }

    pub fn with_claims<S: Into<String>>(mut self, sentence: &str, claims: impl IntoIterator<Item = S>) -> Self {
        self.insert_claims(sentence, claims);
        self
    }

    pub fn classify(&self, premise: &str, hypothesis: &str) -> Result<Verdict, BackendError> {
        let (p, h) = (normalize(premise), normalize(hypothesis));
        if !h.is_empty() && p == h {
            return Ok(Verdict::new(Label::Entailment));
        }
        match (self.nli.get(&(p, h)), self.mode) {
            (Some(&label), _) => Ok(Verdict::new(label)),
            (None, OracleMode::Lenient) => Ok(Verdict::new(Label::Neutral)),
            (None, OracleMode::Strict) => Err(BackendError::UnknownPair {
                premise: premise.to_string(),
                hypothesis: hypothesis.to_string(),
            }),
        }
    }

    pub fn split(&self, sentence: &str) -> Result<Vec<String>, BackendError> {
        match (self.claims.get(&normalize(sentence)), self.mode) {
            (Some(c), _) => Ok(c.clone()),
            (None, OracleMode::Lenient) => {
                tracing::warn!(sentence, "no oracle claim split; using the sentence itself");
                Ok(vec![sentence.to_string()])
            }
            (None, OracleMode::Strict) => Err(BackendError::UnknownSentence(sentence.to_string())),
        }
    }
}

impl EntailmentBackend for TableOracle {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<Verdict>, BackendError> {
        pairs
            .iter()
            .map(|p| self.classify(&p.premise, &p.hypothesis))
            .collect()
    }

    fn fingerprint(&self) -> String {
        let fixture = serde_json::to_vec(&self.to_fixture()).expect("fixture serializes");
        format!("oracle:{}", hex::encode(Sha256::digest(&fixture)))
    }
}

impl ClaimSplitter for TableOracle {
    fn split_batch(&self, sentences: &[String]) -> Result<Vec<Vec<String>>, BackendError> {
        sentences.iter().map(|s| self.split(s)).collect()
    }

    fn fingerprint(&self) -> String {
        EntailmentBackend::fingerprint(self)
    }
}
