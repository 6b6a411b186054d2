//! Citation precision/recall, AIS and ACS over the masked sentences of a
//! summary.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{f1, mean, MetricError};
use crate::backends::VerificationEngine;
use crate::corpus::Document;
use crate::segmenter::{DocId, ParsedSummary};
use crate::verifier::{is_attributable, oracle_citations};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CitationScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Citations used for evaluation: a sentence's own citations, or else
/// those of the nearest following sentence that cites something.
pub fn effective_citations(parsed: &ParsedSummary) -> Vec<BTreeSet<DocId>> {
    let mut out = vec![BTreeSet::new(); parsed.len()];
    let mut next: Option<&BTreeSet<DocId>> = None;
    for (i, s) in parsed.sentences.iter().enumerate().rev() {
        if !s.citations.is_empty() {
            next = Some(&s.citations);
        }
        if let Some(c) = next {
            out[i] = c.clone();
        }
    }
    out
}

/// Per-sentence precision and recall of `cited` against `reference`.
/// Precision is 0 for an empty citation set, recall is 0 for an empty
/// reference set.
pub fn precision_recall(cited: &BTreeSet<DocId>, reference: &BTreeSet<DocId>) -> (f64, f64) {
    let hit = cited.intersection(reference).count() as f64;
    let p = if cited.is_empty() { 0.0 } else { hit / cited.len() as f64 };
    let r = if reference.is_empty() { 0.0 } else { hit / reference.len() as f64 };
    (p, r)
}

pub(crate) fn masked_indices(parsed: &ParsedSummary) -> Result<Vec<usize>, MetricError> {
    let masks = parsed.masks().ok_or(MetricError::MasksMissing)?;
    Ok(masks
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i)
        .collect())
}

/// Citation scores from precomputed oracle citations, one per masked
/// sentence in `masked` order.
pub fn citation_scores_from_refs(
    parsed: &ParsedSummary,
    masked: &[usize],
    refs: &[BTreeSet<DocId>],
) -> Option<CitationScores> {
    if masked.is_empty() {
        return None;
    }
    let eff = effective_citations(parsed);
    let (ps, rs): (Vec<f64>, Vec<f64>) = masked
        .iter()
        .zip(refs)
        .map(|(&i, r)| precision_recall(&eff[i], r))
        .unzip();
    let precision = mean(&ps).unwrap();
    let recall = mean(&rs).unwrap();
    Some(CitationScores {
        precision,
        recall,
        f1: f1(precision, recall),
    })
}

/// `None` when no sentence is masked.
pub fn citation_scores(
    parsed: &ParsedSummary,
    documents: &[Document],
    engine: &VerificationEngine,
) -> Result<Option<CitationScores>, MetricError> {
    let masked = masked_indices(parsed)?;
    let refs = masked
        .iter()
        .map(|&i| oracle_citations(&parsed.sentences[i].text, documents, engine))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(citation_scores_from_refs(parsed, &masked, &refs))
}

/// Fraction of masked sentences attributable to their own citations.
pub fn ais_score(
    parsed: &ParsedSummary,
    documents: &[Document],
    engine: &VerificationEngine,
) -> Result<Option<f64>, MetricError> {
    let masked = masked_indices(parsed)?;
    let hits = masked
        .iter()
        .map(|&i| {
            let s = &parsed.sentences[i];
            is_attributable(&s.text, &s.citations, documents, engine).map(|b| b as u8 as f64)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(&hits))
}

/// Fraction of masked sentences attributable to their oracle citations.
pub fn acs_score(
    parsed: &ParsedSummary,
    documents: &[Document],
    engine: &VerificationEngine,
) -> Result<Option<f64>, MetricError> {
    let masked = masked_indices(parsed)?;
    let hits = masked
        .iter()
        .map(|&i| {
            let s = &parsed.sentences[i];
            let refs = oracle_citations(&s.text, documents, engine)?;
            is_attributable(&s.text, &refs, documents, engine).map(|b| b as u8 as f64)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(&hits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Label, OracleMode, TableOracle};
    use crate::segmenter::{segment_summary, MarkerGrammar};

    fn doc(id: DocId, text: &str) -> Document {
        Document { id, text: text.into(), title: None, url: None, snippet: None, content: None }
    }

    fn parse(s: &str, masks: &[bool]) -> ParsedSummary {
        let mut p = segment_summary(s, &MarkerGrammar::default());
        p.set_masks(masks);
        p
    }

    fn set(v: &[DocId]) -> BTreeSet<DocId> {
        v.iter().copied().collect()
    }

    #[test]
    fn set_arithmetic() {
        assert_eq!(precision_recall(&set(&[1, 2]), &set(&[2, 3])), (0.5, 0.5));
        assert_eq!(precision_recall(&set(&[]), &set(&[1])), (0.0, 0.0));
        assert_eq!(precision_recall(&set(&[1]), &set(&[])), (0.0, 0.0));
    }

    #[test]
    fn fallback_to_next_citations() {
        let p = parse("甲。乙。丙[3]。丁。", &[true; 4]);
        let eff = effective_citations(&p);
        assert_eq!(eff, vec![set(&[3]), set(&[3]), set(&[3]), set(&[])]);
    }

    #[test]
    fn scores_with_fallback_and_zero_rules() {
        let p = parse("甲。乙[3]。丙。", &[true, true, true]);
        let refs = vec![set(&[3]), set(&[3]), set(&[1])];
        let s = citation_scores_from_refs(&p, &[0, 1, 2], &refs).unwrap();
        // sentence 3 has no later citations: 0/0
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!(citation_scores_from_refs(&p, &[], &[]).is_none());
    }

    #[test]
    fn masks_required() {
        let p = segment_summary("甲。", &MarkerGrammar::default());
        let e = VerificationEngine::single(TableOracle::new(OracleMode::Lenient));
        assert!(matches!(ais_score(&p, &[], &e), Err(MetricError::MasksMissing)));
    }

    #[test]
    fn grounded_but_uncited_sentence() {
        // AIS 0, ACS 1
        let docs = [doc(1, "d1"), doc(2, "d2")];
        let p = parse("甲。", &[true]);
        let o = TableOracle::new(OracleMode::Strict)
            .with_claims("甲。", ["甲。"])
            .with_pair("d1", "甲。", Label::Entailment)
            .with_pair("d2", "甲。", Label::Neutral);
        let e = VerificationEngine::single(o);
        assert_eq!(ais_score(&p, &docs, &e).unwrap(), Some(0.0));
        assert_eq!(acs_score(&p, &docs, &e).unwrap(), Some(1.0));
        let c = citation_scores(&p, &docs, &e).unwrap().unwrap();
        assert_eq!((c.precision, c.recall), (0.0, 0.0));
    }

    #[test]
    fn unsupported_sentence_scores_zero_acs() {
        let docs = [doc(1, "d1")];
        let p = parse("甲[1]。", &[true]);
        let e = VerificationEngine::single(TableOracle::new(OracleMode::Lenient));
        assert_eq!(acs_score(&p, &docs, &e).unwrap(), Some(0.0));
        assert_eq!(ais_score(&p, &docs, &e).unwrap(), Some(0.0));
    }

    #[test]
    fn ais_fraction() {
        let docs = [doc(1, "d1"), doc(2, "d2")];
        let p = parse("A[1]。B[1]。C[2]。D[2]。", &[true; 4]);
        let o = TableOracle::new(OracleMode::Lenient)
            .with_pair("d1", "A。", Label::Entailment)
            .with_pair("d2", "D。", Label::Entailment);
        let e = VerificationEngine::single(o);
        assert_eq!(ais_score(&p, &docs, &e).unwrap(), Some(0.5));
        let p = parse("A[1]。B[1]。", &[false, false]);
        assert_eq!(ais_score(&p, &docs, &e).unwrap(), None);
    }
}
