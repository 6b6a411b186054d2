//! Summarization-utility and attribution metrics, per sample and over a
//! corpus.

pub mod agreement;
pub mod attribution;
pub mod bleu;
pub mod claims;
pub mod claimsplit;
pub mod evaluate;
pub mod report;

use thiserror::Error;

use crate::backends::BackendError;
use crate::verifier::VerifyError;

pub use agreement::{aggregate_agreement, cohens_kappa, human_agreement, AgreementReport, Contingency, HumanAgreement};
pub use attribution::{acs_score, ais_score, citation_scores, effective_citations, CitationScores};
pub use bleu::{self_bleu, sentence_bleu};
pub use claims::{claim_scores, ClaimScores};
pub use claimsplit::{claimsplit_quality, sentence_split_quality, ClaimSplitQuality, SentenceSplitQuality};
pub use evaluate::{evaluate_sample, summary_length, EvalConfig, EvalError};
pub use report::{aggregate, CorpusReport, MetricSummary, SampleReport, SentenceReport};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("citation masks have not been computed")]
    MasksMissing,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
