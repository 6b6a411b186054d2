//! JSON wire format shared with the inference sidecar.
//!
//! - `POST /nli`: `{"pairs":[{"premise":..,"hypothesis":..}]}` →
//!   `{"verdicts":[{"label":"entailment|contradiction|neutral","score":0.97}]}`
//! - `POST /claimsplit`: `{"sentences":[..]}` → `{"claims":[[..],[..]]}`
//! - `GET /healthz` → `{"status":"ok","models":{..}}`

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BackendError, Label, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NliPair {
    pub premise: String,
    pub hypothesis: String,
}

impl NliPair {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        Self {
            premise: premise.into(),
            hypothesis: hypothesis.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliRequest {
    pub pairs: Vec<NliPair>,
}

/// A verdict as it appears on the wire; the label is validated on
/// conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireVerdict {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl From<Verdict> for WireVerdict {
    fn from(v: Verdict) -> Self {
        Self {
            label: v.label.as_str().to_string(),
            score: v.score,
        }
    }
}

impl TryFrom<WireVerdict> for Verdict {
    type Error = BackendError;

    fn try_from(w: WireVerdict) -> Result<Self, Self::Error> {
        let label = Label::parse(&w.label)
            .ok_or_else(|| BackendError::Protocol(format!("label {:?} is not one of entailment/contradiction/neutral", w.label)))?;
        if let Some(s) = w.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(BackendError::Protocol(format!("score {s} outside [0,1]")));
            }
        }
        Ok(Verdict { label, score: w.score })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliResponse {
    pub verdicts: Vec<WireVerdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSplitRequest {
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSplitResponse {
    pub claims: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    #[serde(default)]
    pub models: BTreeMap<String, String>,
}
