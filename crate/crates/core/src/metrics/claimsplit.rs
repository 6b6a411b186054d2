//! Quality of a claim-split backend: redundancy, number of splits,
//! correctness and completeness.

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::backends::{NliPair, VerificationEngine};
use crate::verifier::{dedupe_claims, join_premise};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSplitQuality {
    pub claims: Vec<String>,
    pub kept: Vec<String>,
    pub redundancy: f64,
    /// Fraction of claims entailed by the source sentence.
    pub correctness: f64,
    /// The concatenated claims entail the source sentence.
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimSplitQuality {
    pub sentence_count: usize,
    pub redundancy: f64,
    /// Mean number of non-redundant claims per sentence.
    pub n_splits: f64,
    pub correctness: f64,
    pub completeness: f64,
}

pub fn sentence_split_quality(sentence: &str, engine: &VerificationEngine) -> Result<SentenceSplitQuality, MetricError> {
    let claims = engine.split(sentence)?;
    let kept = dedupe_claims(&claims, engine)?;
    let n = claims.len() as f64;
    let pairs: Vec<NliPair> = claims.claims.iter().map(|c| NliPair::new(sentence, c.as_str())).collect();
    let entailed = engine.classify_batch(&pairs)?.iter().filter(|v| v.is_entailment()).count();
    let complete = engine.entails(&join_premise(claims.claims.iter().map(String::as_str)), sentence)?;
    Ok(SentenceSplitQuality {
        redundancy: (claims.len() - kept.len()) as f64 / n,
        correctness: entailed as f64 / n,
        complete,
        claims: claims.claims,
        kept: kept.claims,
    })
}

/// All four measures averaged over sentences.
pub fn claimsplit_quality(sentences: &[String], engine: &VerificationEngine) -> Result<ClaimSplitQuality, MetricError> {
    if sentences.is_empty() {
        return Err(MetricError::EmptyInput("no sentences"));
    }
    let per = sentences
        .iter()
        .map(|s| sentence_split_quality(s, engine))
        .collect::<Result<Vec<_>, _>>()?;
    let n = per.len() as f64;
    let avg = |f: &dyn Fn(&SentenceSplitQuality) -> f64| per.iter().map(f).sum::<f64>() / n;
    Ok(ClaimSplitQuality {
        sentence_count: per.len(),
        redundancy: avg(&|q| q.redundancy),
        n_splits: avg(&|q| q.kept.len() as f64),
        correctness: avg(&|q| q.correctness),
        completeness: avg(&|q| q.complete as u8 as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Label, OracleMode, TableOracle};

    #[test]
    fn one_redundant_pair_of_three() {
        let s = "甲且乙。";
        let o = TableOracle::new(OracleMode::Lenient)
            .with_claims(s, ["甲。", "甲成立。", "乙。"])
            .with_pair("甲。", "甲成立。", Label::Entailment)
            .with_pair("甲成立。", "甲。", Label::Entailment)
            .with_pair(s, "甲。", Label::Entailment)
            .with_pair(s, "甲成立。", Label::Entailment)
            .with_pair(s, "乙。", Label::Entailment)
            .with_pair("甲。\n甲成立。\n乙。", s, Label::Entailment);
        let q = claimsplit_quality(&[s.to_string()], &VerificationEngine::single(o)).unwrap();
        assert!((q.redundancy - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.n_splits, 2.0);
        assert_eq!(q.correctness, 1.0);
        assert_eq!(q.completeness, 1.0);
    }

    #[test]
    fn atomic_sentence() {
        let e = VerificationEngine::single(TableOracle::new(OracleMode::Lenient));
        let q = claimsplit_quality(&["atomic.".to_string(), "other.".to_string()], &e).unwrap();
        // singleton claim sets are reflexively correct and complete
        assert_eq!((q.redundancy, q.n_splits, q.correctness, q.completeness), (0.0, 1.0, 1.0, 1.0));
        assert!(claimsplit_quality(&[], &e).is_err());
    }
}
