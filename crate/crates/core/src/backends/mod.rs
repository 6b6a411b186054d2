//! Entailment and claim-split backends, the verification engine that
//! fronts them, and its result cache.

mod cache;
mod engine;
mod oracle;
pub mod protocol;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::ResultCache;
pub use engine::VerificationEngine;
pub use oracle::{OracleFixture, OracleMode, TableOracle};
pub use protocol::NliPair;
pub use remote::{RemoteBackend, RemoteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
    Neutral,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Contradiction => "contradiction",
            Label::Neutral => "neutral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "entailment" => Some(Label::Entailment),
            "contradiction" => Some(Label::Contradiction),
            "neutral" => Some(Label::Neutral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl Verdict {
    pub fn new(label: Label) -> Self {
        Self { label, score: None }
    }

    pub fn is_entailment(&self) -> bool {
        self.label == Label::Entailment
    }
}

/// Sub-claims of one sentence. Never empty; an indivisible sentence is its
/// own single claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSet {
    pub source: String,
    pub claims: Vec<String>,
}

impl ClaimSet {
    pub fn len(&self) -> usize {
        self.claims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no oracle entry for premise {premise:?} / hypothesis {hypothesis:?}")]
    UnknownPair { premise: String, hypothesis: String },
    #[error("no oracle claim split for {0:?}")]
    UnknownSentence(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("batch of {size} exceeds the configured maximum {max}")]
    BatchTooLarge { size: usize, max: usize },
    #[error("fixture: {0}")]
    Fixture(String),
    #[error("cache: {0}")]
    Cache(String),
}

/// The entailment model: does the premise entail, contradict, or stay
/// neutral towards the hypothesis. Results must be positionally aligned.
pub trait EntailmentBackend: Send + Sync {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<Verdict>, BackendError>;

    /// Identifies the backend for cache namespacing.
    fn fingerprint(&self) -> String;
}

/// The claim-split model. Returns one claim list per sentence, aligned.
pub trait ClaimSplitter: Send + Sync {
    fn split_batch(&self, sentences: &[String]) -> Result<Vec<Vec<String>>, BackendError>;

    fn fingerprint(&self) -> String;
}
