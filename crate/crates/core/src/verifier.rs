//! Sentence-level verification against source documents: support
//! classification, oracle citations, attributability, citation masks and
//! sub-claim de-duplication.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, ClaimSet, Label, NliPair, VerificationEngine};
use crate::corpus::Document;
use crate::segmenter::{DocId, ParsedSummary};

/// Separator used whenever several texts are concatenated into one premise.
pub const PREMISE_SEPARATOR: &str = "\n";

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("human mask policy requires human citations")]
    MissingHumanCitations,
    #[error("human citations cover {got} sentences, summary has {expected}")]
    HumanCitationLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportLabel {
    Full,
    Partial,
    Contradiction,
    #[serde(rename = "none")]
    NoSupport,
}

impl SupportLabel {
    pub fn supports(self) -> bool {
        matches!(self, SupportLabel::Full | SupportLabel::Partial)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskPolicy {
    /// Every sentence needs citations.
    Default,
    /// Predicted from the summary itself.
    #[default]
    Auto,
    /// Sentences with human citations.
    Human,
}

impl fmt::Display for MaskPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskPolicy::Default => "default",
            MaskPolicy::Auto => "auto",
            MaskPolicy::Human => "human",
        })
    }
}

impl FromStr for MaskPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(MaskPolicy::Default),
            "auto" => Ok(MaskPolicy::Auto),
            "human" => Ok(MaskPolicy::Human),
            other => Err(format!("unknown mask policy `{other}` (default|auto|human)")),
        }
    }
}

pub fn join_premise<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    texts.into_iter().collect::<Vec<_>>().join(PREMISE_SEPARATOR)
}

/// Cited documents in ascending id order. Ids without a document are skipped.
fn cited_documents<'a>(cited: &BTreeSet<DocId>, documents: &'a [Document]) -> Vec<&'a Document> {
    let mut docs: Vec<&Document> = documents.iter().filter(|d| cited.contains(&d.id)).collect();
    docs.sort_by_key(|d| d.id);
    docs
}

pub fn classify_support(
    sentence: &str,
    document: &Document,
    engine: &VerificationEngine,
) -> Result<SupportLabel, BackendError> {
    Ok(support_labels(sentence, std::slice::from_ref(document), engine)?[0])
}

/// Support label of `sentence` against each document, in document order.
///
/// Full when the document entails the sentence, contradiction when it
/// contradicts it, partial when it is neutral on the sentence but entails
/// at least one sub-claim.
pub fn support_labels(
    sentence: &str,
    documents: &[Document],
    engine: &VerificationEngine,
) -> Result<Vec<SupportLabel>, BackendError> {
    let pairs: Vec<NliPair> = documents
        .iter()
        .map(|d| NliPair::new(d.text.as_str(), sentence))
        .collect();
    let verdicts = engine.classify_batch(&pairs)?;
    let mut labels: Vec<Option<SupportLabel>> = verdicts
        .iter()
        .map(|v| match v.label {
            Label::Entailment => Some(SupportLabel::Full),
            Label::Contradiction => Some(SupportLabel::Contradiction),
            Label::Neutral => None,
        })
        .collect();

    let undecided: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_none()).collect();
    if !undecided.is_empty() {
        let claims = engine.split(sentence)?;
        let pairs: Vec<NliPair> = undecided
            .iter()
            .flat_map(|&i| {
                claims
                    .claims
                    .iter()
                    .map(move |c| NliPair::new(documents[i].text.as_str(), c.as_str()))
            })
            .collect();
        let verdicts = engine.classify_batch(&pairs)?;
        for (k, &i) in undecided.iter().enumerate() {
            let row = &verdicts[k * claims.len()..(k + 1) * claims.len()];
            labels[i] = Some(if row.iter().any(|v| v.is_entailment()) {
                SupportLabel::Partial
            } else {
                SupportLabel::NoSupport
            });
        }
    }
    Ok(labels.into_iter().map(|l| l.expect("labelled")).collect())
}

/// Documents that fully or partially support the sentence.
pub fn oracle_citations(
    sentence: &str,
    documents: &[Document],
    engine: &VerificationEngine,
) -> Result<BTreeSet<DocId>, BackendError> {
    let labels = support_labels(sentence, documents, engine)?;
    Ok(documents
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.supports())
        .map(|(d, _)| d.id)
        .collect())
}

/// Whether the cited documents jointly support the sentence: no cited
/// document contradicts it, and their concatenation entails either the
/// sentence or every one of its sub-claims.
pub fn is_attributable(
    sentence: &str,
    cited: &BTreeSet<DocId>,
    documents: &[Document],
    engine: &VerificationEngine,
) -> Result<bool, BackendError> {
    if cited.is_empty() {
        return Ok(false);
    }
    let docs = cited_documents(cited, documents);
    let individual: Vec<NliPair> = docs
        .iter()
        .map(|d| NliPair::new(d.text.as_str(), sentence))
        .collect();
    if engine
        .classify_batch(&individual)?
        .iter()
        .any(|v| v.label == Label::Contradiction)
    {
        return Ok(false);
    }
    let premise = join_premise(docs.iter().map(|d| d.text.as_str()));
    if engine.entails(&premise, sentence)? {
        return Ok(true);
    }
    let claims = engine.split(sentence)?;
    let pairs: Vec<NliPair> = claims
        .claims
        .iter()
        .map(|c| NliPair::new(premise.as_str(), c.as_str()))
        .collect();
    Ok(engine.classify_batch(&pairs)?.iter().all(|v| v.is_entailment()))
}

/// Which sentences need citations.
///
/// Under `Auto`, a sentence is exempt only when it cites nothing and is
/// entailed by the other sentences that do cite something.
pub fn predict_citation_mask(
    parsed: &ParsedSummary,
    engine: &VerificationEngine,
    policy: MaskPolicy,
    human_citations: Option<&[BTreeSet<DocId>]>,
) -> Result<Vec<bool>, VerifyError> {
    let n = parsed.len();
    match policy {
        MaskPolicy::Default => Ok(vec![true; n]),
        MaskPolicy::Human => {
            let human = human_citations.ok_or(VerifyError::MissingHumanCitations)?;
            if human.len() != n {
                return Err(VerifyError::HumanCitationLength { expected: n, got: human.len() });
            }
            Ok(human.iter().map(|c| !c.is_empty()).collect())
        }
        MaskPolicy::Auto => {
            let mut mask = vec![true; n];
            let mut pairs = Vec::new();
            let mut targets = Vec::new();
            for (i, s) in parsed.sentences.iter().enumerate() {
                if !s.citations.is_empty() {
                    continue;
                }
                let rest = join_premise(
                    parsed
                        .sentences
                        .iter()
                        .filter(|o| o.index != s.index && !o.citations.is_empty())
                        .map(|o| o.text.as_str()),
                );
                pairs.push(NliPair::new(rest, s.text.as_str()));
                targets.push(i);
            }
            let verdicts = engine.classify_batch(&pairs)?;
            for (i, v) in targets.into_iter().zip(verdicts) {
                mask[i] = !v.is_entailment();
            }
            Ok(mask)
        }
    }
}

/// Drop every claim that mutually entails an earlier kept claim.
pub fn dedupe_claims(claims: &ClaimSet, engine: &VerificationEngine) -> Result<ClaimSet, BackendError> {
    let mut kept: Vec<String> = Vec::with_capacity(claims.len());
    for c in &claims.claims {
        let mut redundant = false;
        for k in &kept {
            let v = engine.classify_batch(&[NliPair::new(k.as_str(), c.as_str()), NliPair::new(c.as_str(), k.as_str())])?;
            if v[0].is_entailment() && v[1].is_entailment() {
                redundant = true;
                break;
            }
        }
        if !redundant {
            kept.push(c.clone());
        }
    }
    Ok(ClaimSet {
        source: claims.source.clone(),
        claims: kept,
    })
}
