//! Agreement between evaluator-predicted citations and human citations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::attribution::precision_recall;
use super::{f1, mean, MetricError};
use crate::backends::VerificationEngine;
use crate::corpus::Sample;
use crate::segmenter::{segment_summary, DocId, MarkerGrammar};
use crate::verifier::{is_attributable, oracle_citations, predict_citation_mask, MaskPolicy};

/// 2x2 table of binary decisions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    /// Both say yes.
    pub both: usize,
    pub pred_only: usize,
    pub human_only: usize,
    pub neither: usize,
}

impl Contingency {
    pub fn from_decisions(pred: &[bool], human: &[bool]) -> Result<Self, MetricError> {
        if pred.len() != human.len() {
            return Err(MetricError::LengthMismatch(pred.len(), human.len()));
        }
        if pred.is_empty() {
            return Err(MetricError::EmptyInput("no decisions"));
        }
        let mut t = Self::default();
        for (&p, &h) in pred.iter().zip(human) {
            match (p, h) {
                (true, true) => t.both += 1,
                (true, false) => t.pred_only += 1,
                (false, true) => t.human_only += 1,
                (false, false) => t.neither += 1,
            }
        }
        Ok(t)
    }

    pub fn total(&self) -> usize {
        self.both + self.pred_only + self.human_only + self.neither
    }

    pub fn observed(&self) -> f64 {
        (self.both + self.neither) as f64 / self.total() as f64
    }

    pub fn expected(&self) -> f64 {
        let n = self.total() as f64;
        let pred_yes = (self.both + self.pred_only) as f64;
        let human_yes = (self.both + self.human_only) as f64;
        (pred_yes * human_yes + (n - pred_yes) * (n - human_yes)) / (n * n)
    }

    /// Cohen's kappa; 1 when chance agreement is already perfect.
    pub fn kappa(&self) -> f64 {
        let (po, pe) = (self.observed(), self.expected());
        if pe == 1.0 {
            1.0
        } else {
            (po - pe) / (1.0 - pe)
        }
    }
}

pub fn cohens_kappa(pred: &[bool], human: &[bool]) -> Result<f64, MetricError> {
    Ok(Contingency::from_decisions(pred, human)?.kappa())
}

/// Evaluator citations for a reference summary compared with the human
/// citations of the same sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanAgreement {
    pub sample_id: String,
    pub sentence_count: usize,
    pub masks: Vec<bool>,
    /// One decision per (masked sentence, document): does the evaluator cite it.
    pub predicted: Vec<bool>,
    /// Same pairs: did the human cite it.
    pub human: Vec<bool>,
    pub citation_precision: Option<f64>,
    pub citation_recall: Option<f64>,
    /// AIS of the masked sentences using human citations.
    pub ais_human: Option<f64>,
    /// AIS of the masked sentences using evaluator citations.
    pub ais_predicted: Option<f64>,
}

/// Human citations come from the sample's annotations when present and
/// from the reference summary's markers otherwise.
pub fn human_agreement(
    sample: &Sample,
    grammar: &MarkerGrammar,
    engine: &VerificationEngine,
    policy: MaskPolicy,
) -> Result<HumanAgreement, MetricError> {
    let parsed = segment_summary(&sample.summary_markup, grammar);
    let human: Vec<BTreeSet<DocId>> = match &sample.human_citations {
        Some(h) => h.clone(),
        None => parsed.citation_sets(),
    };
    let masks = predict_citation_mask(&parsed, engine, policy, Some(&human))?;
    let (mut predicted, mut human_dec) = (Vec::new(), Vec::new());
    let (mut ps, mut rs, mut ais_h, mut ais_p) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, s) in parsed.sentences.iter().enumerate() {
        if !masks[i] {
            continue;
        }
        let refs = oracle_citations(&s.text, &sample.documents, engine)?;
        for d in &sample.documents {
            predicted.push(refs.contains(&d.id));
            human_dec.push(human[i].contains(&d.id));
        }
        let (p, r) = precision_recall(&refs, &human[i]);
        ps.push(p);
        rs.push(r);
        ais_h.push(is_attributable(&s.text, &human[i], &sample.documents, engine)? as u8 as f64);
        ais_p.push(is_attributable(&s.text, &refs, &sample.documents, engine)? as u8 as f64);
    }
    Ok(HumanAgreement {
        sample_id: sample.sample_id.clone(),
        sentence_count: parsed.len(),
        masks,
        predicted,
        human: human_dec,
        citation_precision: mean(&ps),
        citation_recall: mean(&rs),
        ais_human: mean(&ais_h),
        ais_predicted: mean(&ais_p),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub policy: MaskPolicy,
    pub sample_count: usize,
    pub decision_count: usize,
    pub contingency: Contingency,
    pub kappa: Option<f64>,
    pub accuracy: Option<f64>,
    pub citation_precision: Option<f64>,
    pub citation_recall: Option<f64>,
    pub citation_f1: Option<f64>,
    pub ais_human: Option<f64>,
    pub ais_predicted: Option<f64>,
}

/// Kappa and accuracy pool every decision; the other fields are means
/// over samples with at least one masked sentence.
pub fn aggregate_agreement(policy: MaskPolicy, rows: &[HumanAgreement]) -> AgreementReport {
    let pred: Vec<bool> = rows.iter().flat_map(|r| r.predicted.iter().copied()).collect();
    let human: Vec<bool> = rows.iter().flat_map(|r| r.human.iter().copied()).collect();
    let table = Contingency::from_decisions(&pred, &human).ok();
    let collect = |f: &dyn Fn(&HumanAgreement) -> Option<f64>| -> Option<f64> {
        let mut v: Vec<f64> = rows.iter().filter_map(f).collect();
        v.sort_by(f64::total_cmp);
        mean(&v)
    };
    let precision = collect(&|r| r.citation_precision);
    let recall = collect(&|r| r.citation_recall);
    AgreementReport {
        policy,
        sample_count: rows.len(),
        decision_count: pred.len(),
        contingency: table.unwrap_or_default(),
        kappa: table.map(|t| t.kappa()),
        accuracy: table.map(|t| t.observed()),
        citation_precision: precision,
        citation_recall: recall,
        citation_f1: precision.zip(recall).map(|(p, r)| f1(p, r)),
        ais_human: collect(&|r| r.ais_human),
        ais_predicted: collect(&|r| r.ais_predicted),
    }
}
