//! Full metric bundle for one sample.

use std::borrow::Cow;
use std::collections::BTreeSet;

use thiserror::Error;

use super::attribution::{citation_scores_from_refs, effective_citations, precision_recall};
use super::report::{SampleReport, SentenceReport};
use super::{claim_scores, mean, self_bleu, MetricError};
use crate::backends::VerificationEngine;
use crate::corpus::{chunk_sample, Sample};
use crate::segmenter::{segment_summary, DocId, MarkerGrammar, ParsedSummary};
use crate::text::text_length;
use crate::verifier::{is_attributable, oracle_citations, predict_citation_mask, MaskPolicy};

#[derive(Debug, Clone, Default)]
pub struct EvalConfig {
    pub policy: MaskPolicy,
    pub grammar: MarkerGrammar,
    /// Re-chunk document content into passages of at most this many
    /// characters before evaluation.
    pub max_doc_len: Option<usize>,
}

#[derive(Debug, Error)]
#[error("sample {sample_id}: {source}")]
pub struct EvalError {
    pub sample_id: String,
    #[source]
    pub source: MetricError,
}

/// Length of the summary with citation markers removed.
pub fn summary_length(parsed: &ParsedSummary) -> usize {
    text_length(&parsed.plain_text)
}

pub fn evaluate_sample(
    sample: &Sample,
    system_markup: &str,
    engine: &VerificationEngine,
    config: &EvalConfig,
) -> Result<SampleReport, EvalError> {
    evaluate_inner(sample, system_markup, engine, config).map_err(|source| EvalError {
        sample_id: sample.sample_id.clone(),
        source,
    })
}

fn evaluate_inner(
    sample: &Sample,
    system_markup: &str,
    engine: &VerificationEngine,
    config: &EvalConfig,
) -> Result<SampleReport, MetricError> {
    let working: Cow<Sample> = match config.max_doc_len {
        Some(n) => Cow::Owned(chunk_sample(sample, n)),
        None => Cow::Borrowed(sample),
    };
    let documents = &working.documents;
    let mut system = segment_summary(system_markup, &config.grammar);
    let reference = segment_summary(&sample.summary_markup, &config.grammar);

    let mut diagnostics = system.warnings.clone();
    let known = working.document_ids();
    for s in &system.sentences {
        let unknown: Vec<DocId> = s.citations.difference(&known).copied().collect();
        if !unknown.is_empty() {
            diagnostics.push(format!("sentence {}: citation ids {unknown:?} name no document", s.index));
        }
    }

    let human: Vec<BTreeSet<DocId>> = match &sample.human_citations {
        Some(h) => h.clone(),
        None => reference.citation_sets(),
    };
    let masks = predict_citation_mask(&system, engine, config.policy, Some(&human))?;
    system.set_masks(&masks);

    let eff = effective_citations(&system);
    let mut sentences = Vec::with_capacity(system.len());
    let (mut masked, mut refs, mut ais, mut acs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, s) in system.sentences.iter().enumerate() {
        let mut row = SentenceReport {
            index: s.index,
            text: s.text.clone(),
            citations: s.citations.clone(),
            mask: masks[i],
            effective_citations: eff[i].clone(),
            oracle_citations: None,
            citation_precision: None,
            citation_recall: None,
            attributable: None,
            oracle_attributable: None,
        };
        if masks[i] {
            let r = oracle_citations(&s.text, documents, engine)?;
            let (p, rc) = precision_recall(&eff[i], &r);
            let own = is_attributable(&s.text, &s.citations, documents, engine)?;
            let oracle = is_attributable(&s.text, &r, documents, engine)?;
            ais.push(own as u8 as f64);
            acs.push(oracle as u8 as f64);
            row.citation_precision = Some(p);
            row.citation_recall = Some(rc);
            row.attributable = Some(own);
            row.oracle_attributable = Some(oracle);
            row.oracle_citations = Some(r.clone());
            masked.push(i);
            refs.push(r);
        }
        sentences.push(row);
    }
    let citation = citation_scores_from_refs(&system, &masked, &refs);
    let claims = claim_scores(&system, &reference, engine)?;

    Ok(SampleReport {
        sample_id: sample.sample_id.clone(),
        length: summary_length(&system),
        sentence_count: system.len(),
        masked_sentence_count: masked.len(),
        self_bleu: self_bleu(&system),
        claim_precision: claims.precision,
        claim_recall: claims.recall,
        claim_f1: claims.f1,
        citation_precision: citation.map(|c| c.precision),
        citation_recall: citation.map(|c| c.recall),
        citation_f1: citation.map(|c| c.f1),
        ais: mean(&ais),
        acs: mean(&acs),
        sentences,
        diagnostics,
    })
}
