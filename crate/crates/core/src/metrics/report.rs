//! Per-sample report bundles and their corpus aggregate.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{f1, MetricError};
use crate::segmenter::DocId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceReport {
    pub index: usize,
    pub text: String,
    pub citations: BTreeSet<DocId>,
    pub mask: bool,
    pub effective_citations: BTreeSet<DocId>,
    /// Only computed for masked sentences.
    pub oracle_citations: Option<BTreeSet<DocId>>,
    pub citation_precision: Option<f64>,
    pub citation_recall: Option<f64>,
    pub attributable: Option<bool>,
    pub oracle_attributable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub sample_id: String,
    pub length: usize,
    pub sentence_count: usize,
    pub masked_sentence_count: usize,
    pub self_bleu: Option<f64>,
    pub claim_precision: f64,
    pub claim_recall: f64,
    pub claim_f1: f64,
    pub citation_precision: Option<f64>,
    pub citation_recall: Option<f64>,
    pub citation_f1: Option<f64>,
    pub ais: Option<f64>,
    pub acs: Option<f64>,
    pub sentences: Vec<SentenceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub included: usize,
    pub excluded: usize,
}

impl MetricSummary {
    /// Macro mean over the non-null values. Values are summed in sorted
    /// order so the result does not depend on input order.
    pub fn from_values(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut present = Vec::new();
        let mut excluded = 0;
        for v in values {
            match v {
                Some(x) => present.push(x),
                None => excluded += 1,
            }
        }
        present.sort_by(f64::total_cmp);
        let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        Self {
            mean,
            included: present.len(),
            excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub sample_count: usize,
    pub length: MetricSummary,
    pub sentence_count: MetricSummary,
    pub masked_sentence_count: MetricSummary,
    pub self_bleu: MetricSummary,
    pub claim_precision: MetricSummary,
    pub claim_recall: MetricSummary,
    /// Mean of per-sample F1.
    pub claim_f1: MetricSummary,
    pub citation_precision: MetricSummary,
    pub citation_recall: MetricSummary,
    pub citation_f1: MetricSummary,
    pub ais: MetricSummary,
    pub acs: MetricSummary,
    /// Harmonic mean of the corpus precision and recall means. This is
    /// the F1 shown in the rendered table.
    pub claim_f1_corpus: f64,
    pub citation_f1_corpus: Option<f64>,
}

pub fn aggregate(reports: &[SampleReport]) -> Result<CorpusReport, MetricError> {
    if reports.is_empty() {
        return Err(MetricError::EmptyInput("no sample reports"));
    }
    let summary = |f: &dyn Fn(&SampleReport) -> Option<f64>| MetricSummary::from_values(reports.iter().map(f));
    let claim_precision = summary(&|r| Some(r.claim_precision));
    let claim_recall = summary(&|r| Some(r.claim_recall));
    let citation_precision = summary(&|r| r.citation_precision);
    let citation_recall = summary(&|r| r.citation_recall);
    Ok(CorpusReport {
        sample_count: reports.len(),
        length: summary(&|r| Some(r.length as f64)),
        sentence_count: summary(&|r| Some(r.sentence_count as f64)),
        masked_sentence_count: summary(&|r| Some(r.masked_sentence_count as f64)),
        self_bleu: summary(&|r| r.self_bleu),
        claim_f1: summary(&|r| Some(r.claim_f1)),
        citation_f1: summary(&|r| r.citation_f1),
        ais: summary(&|r| r.ais),
        acs: summary(&|r| r.acs),
        claim_f1_corpus: f1(claim_precision.mean.unwrap(), claim_recall.mean.unwrap()),
        citation_f1_corpus: citation_precision.mean.zip(citation_recall.mean).map(|(p, r)| f1(p, r)),
        claim_precision,
        claim_recall,
        citation_precision,
        citation_recall,
    })
}

impl CorpusReport {
    /// Plain-text table: length, self-BLEU, claim P/R/F1, citation P/R/F1,
    /// AIS, ACS. Fractions are shown as percentages.
    pub fn render_table(&self, label: &str) -> String {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.1}", 100.0 * x));
        let raw = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.1}"));
        let header = [
            "System", "Len.", "Self-BLEU", "Claim P", "Claim R", "Claim F1", "Cite P", "Cite R", "Cite F1", "AIS",
            "ACS",
        ];
        let row = [
            label.to_string(),
            self.length.mean.map_or("-".to_string(), |x| format!("{x:.0}")),
            raw(self.self_bleu.mean),
            pct(self.claim_precision.mean),
            pct(self.claim_recall.mean),
            pct(Some(self.claim_f1_corpus)),
            pct(self.citation_precision.mean),
            pct(self.citation_recall.mean),
            pct(self.citation_f1_corpus),
            pct(self.ais.mean),
            pct(self.acs.mean),
        ];
        let widths: Vec<usize> = header
            .iter()
            .zip(&row)
            .map(|(h, r)| h.chars().count().max(r.chars().count()))
            .collect();
        let mut out = String::new();
        for cells in [header.map(String::from), row] {
            let line: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}
