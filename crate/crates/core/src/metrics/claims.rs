use serde::{Deserialize, Serialize};

use super::{f1, MetricError};
use crate::backends::{NliPair, VerificationEngine};
use crate::segmenter::ParsedSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Fraction of the sub-claims of `claims_from` entailed by the plain text
/// of `premise`. Zero when there are no claims.
fn entailed_fraction(
    claims_from: &ParsedSummary,
    premise: &ParsedSummary,
    engine: &VerificationEngine,
) -> Result<f64, MetricError> {
    let sentences: Vec<String> = claims_from.sentences.iter().map(|s| s.text.clone()).collect();
    let claims: Vec<String> = engine
        .split_batch(&sentences)?
        .into_iter()
        .flat_map(|c| c.claims)
        .collect();
    if claims.is_empty() {
        return Ok(0.0);
    }
    let pairs: Vec<NliPair> = claims
        .iter()
        .map(|c| NliPair::new(premise.plain_text.as_str(), c.as_str()))
        .collect();
    let entailed = engine.classify_batch(&pairs)?.iter().filter(|v| v.is_entailment()).count();
    Ok(entailed as f64 / claims.len() as f64)
}

/// Claim precision (system claims entailed by the reference), claim recall
/// (reference claims entailed by the system summary) and their F1.
pub fn claim_scores(
    system: &ParsedSummary,
    reference: &ParsedSummary,
    engine: &VerificationEngine,
) -> Result<ClaimScores, MetricError> {
    let precision = entailed_fraction(system, reference, engine)?;
    let recall = entailed_fraction(reference, system, engine)?;
    Ok(ClaimScores {
        precision,
        recall,
        f1: f1(precision, recall),
    })
}
