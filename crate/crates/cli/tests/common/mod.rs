//! Fact-language fixtures and an independent brute-force evaluator.
//!
//! Every text is a bag of literals `事实N` / `并非事实N`. A premise entails
//! a hypothesis when it holds every hypothesis literal, contradicts it when
//! it holds the negation of one, and is neutral otherwise. Sentences end in
//! `。` and carry `[..]` or `【..】` markers before the terminator.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use attrib_eval::backends::{Label, OracleMode, TableOracle};
use regex::Regex;
use serde_json::Value;

pub type Lit = (bool, u32);
pub type Lits = BTreeSet<Lit>;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn lits(text: &str) -> Lits {
    let re = Regex::new(r"(并非)?事实(\d+)").unwrap();
    re.captures_iter(text)
        .map(|c| (c.get(1).is_none(), c[2].parse().unwrap()))
        .collect()
}

pub fn phi(premise: &Lits, hypothesis: &Lits) -> Label {
    if hypothesis.iter().any(|&(pol, n)| premise.contains(&(!pol, n))) {
        Label::Contradiction
    } else if !hypothesis.is_empty() && hypothesis.is_subset(premise) {
        Label::Entailment
    } else {
        Label::Neutral
    }
}

fn union<'a>(sets: impl IntoIterator<Item = &'a Lits>) -> Lits {
    sets.into_iter().flatten().copied().collect()
}

#[derive(Debug, Clone)]
pub struct RefSentence {
    pub text: String,
    pub cites: BTreeSet<u32>,
}

/// Split fact-language markup at every `。`.
pub fn segment(markup: &str) -> Vec<RefSentence> {
    let marker = Regex::new(r"[\[【]([0-9,，、\s]+)[\]】]").unwrap();
    markup
        .split_inclusive('。')
        .filter(|p| !p.trim().is_empty())
        .map(|piece| {
            let mut cites = BTreeSet::new();
            for c in marker.captures_iter(piece) {
                for id in c[1].split(|ch: char| !ch.is_ascii_digit()).filter(|x| !x.is_empty()) {
                    cites.insert(id.parse().unwrap());
                }
            }
            RefSentence {
                text: marker.replace_all(piece, "").trim().to_string(),
                cites,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FactSample {
    pub id: String,
    pub docs: Vec<String>,
    pub reference: String,
    pub prediction: Option<String>,
}

pub struct Claims(pub HashMap<String, Vec<String>>);

impl Claims {
    pub fn load() -> Self {
        let raw = std::fs::read_to_string(fixtures().join("claims.json")).unwrap();
        Claims(serde_json::from_str(&raw).unwrap())
    }

    pub fn none() -> Self {
        Claims(HashMap::new())
    }

    /// Scripted split, or one claim per literal.
    pub fn psi(&self, sentence: &str) -> Vec<String> {
        if let Some(c) = self.0.get(sentence) {
            return c.clone();
        }
        lits(sentence)
            .into_iter()
            .map(|(pol, n)| format!("{}事实{n}。", if pol { "" } else { "并非" }))
            .collect()
    }
}

pub fn load_samples(dataset: &str, predictions: Option<&str>) -> Vec<FactSample> {
    let preds: HashMap<String, String> = match predictions {
        Some(p) => std::fs::read_to_string(fixtures().join(p))
            .unwrap()
            .lines()
            .map(|l| {
                let v: Value = serde_json::from_str(l).unwrap();
                (v["sample_id"].as_str().unwrap().to_string(), v["summary"].as_str().unwrap().to_string())
            })
            .collect(),
        None => HashMap::new(),
    };
    std::fs::read_to_string(fixtures().join(dataset))
        .unwrap()
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            let id = v["id"].as_str().unwrap().to_string();
            FactSample {
                docs: v["documents"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|d| d["text"].as_str().unwrap().to_string())
                    .collect(),
                reference: v["summary"].as_str().unwrap().to_string(),
                prediction: preds.get(&id).cloned(),
                id,
            }
        })
        .collect()
}

/// Strict table oracle covering every pair the evaluator can ask about:
/// all document subsets, the other-cited-sentence premises, both plain
/// texts, claim concatenations, single claims and sentences as premises,
/// against every sentence and claim as hypothesis.
pub fn build_oracle(samples: &[FactSample], claims: &Claims) -> TableOracle {
    let mut oracle = TableOracle::new(OracleMode::Strict);
    for s in samples {
        let mut summaries = vec![segment(&s.reference)];
        if let Some(p) = &s.prediction {
            summaries.push(segment(p));
        }
        let mut hyps: BTreeSet<String> = BTreeSet::new();
        let mut premises: BTreeSet<String> = BTreeSet::new();
        for summary in &summaries {
            for (i, sent) in summary.iter().enumerate() {
                let psi = claims.psi(&sent.text);
                oracle.insert_claims(&sent.text, psi.clone());
                hyps.insert(sent.text.clone());
                premises.insert(sent.text.clone());
                premises.insert(psi.join("\n"));
                for c in &psi {
                    hyps.insert(c.clone());
                    premises.insert(c.clone());
                }
                let others: Vec<&str> = summary
                    .iter()
                    .enumerate()
                    .filter(|(j, o)| *j != i && !o.cites.is_empty())
                    .map(|(_, o)| o.text.as_str())
                    .collect();
                premises.insert(others.join("\n"));
            }
            premises.insert(summary.iter().map(|x| x.text.as_str()).collect::<String>());
        }
        let n = s.docs.len();
        for mask in 1u32..(1 << n) {
            let subset: Vec<&str> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| s.docs[k].as_str()).collect();
            premises.insert(subset.join("\n"));
        }
        let hyps: Vec<_> = hyps.iter().map(|h| (h, lits(h))).collect();
        for p in premises.iter().filter(|p| !p.is_empty()) {
            let pl = lits(p);
            for (h, hl) in &hyps {
                oracle.insert_pair(p, h, phi(&pl, hl));
            }
        }
    }
    oracle
}

/// Brute-force per-sample metrics, named after the report fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expected {
    pub masks: Vec<bool>,
    pub masked: usize,
    pub citation_precision: Option<f64>,
    pub citation_recall: Option<f64>,
    pub citation_f1: Option<f64>,
    pub ais: Option<f64>,
    pub acs: Option<f64>,
    pub claim_precision: f64,
    pub claim_recall: f64,
    pub claim_f1: f64,
    pub oracle_citations: Vec<Option<BTreeSet<u32>>>,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn avg(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub struct Ctx<'a> {
    pub docs: Vec<Lits>,
    pub claims: &'a Claims,
}

impl<'a> Ctx<'a> {
    pub fn new(sample: &FactSample, claims: &'a Claims) -> Self {
        Ctx {
            docs: sample.docs.iter().map(|d| lits(d)).collect(),
            claims,
        }
    }

    fn doc(&self, id: u32) -> Option<&Lits> {
        self.docs.get((id as usize).checked_sub(1)?)
    }

    /// Documents that fully or partially support the sentence.
    pub fn c_ref(&self, sentence: &str) -> BTreeSet<u32> {
        let s = lits(sentence);
        let psi: Vec<Lits> = self.claims.psi(sentence).iter().map(|c| lits(c)).collect();
        (1..=self.docs.len() as u32)
            .filter(|&id| {
                let d = self.doc(id).unwrap();
                match phi(d, &s) {
                    Label::Entailment => true,
                    Label::Contradiction => false,
                    Label::Neutral => psi.iter().any(|c| phi(d, c) == Label::Entailment),
                }
            })
            .collect()
    }

    pub fn attributable(&self, sentence: &str, cited: &BTreeSet<u32>) -> bool {
        let docs: Vec<&Lits> = cited.iter().filter_map(|&id| self.doc(id)).collect();
        if cited.is_empty() || docs.is_empty() {
            return false;
        }
        let s = lits(sentence);
        if docs.iter().any(|d| phi(d, &s) == Label::Contradiction) {
            return false;
        }
        let all = union(docs.iter().copied());
        phi(&all, &s) == Label::Entailment
            || self
                .claims
                .psi(sentence)
                .iter()
                .all(|c| phi(&all, &lits(c)) == Label::Entailment)
    }
}

pub fn auto_masks(summary: &[RefSentence]) -> Vec<bool> {
    (0..summary.len())
        .map(|i| {
            if !summary[i].cites.is_empty() {
                return true;
            }
            let star = union(
                summary
                    .iter()
                    .enumerate()
                    .filter(|(j, o)| *j != i && !o.cites.is_empty())
                    .map(|(_, o)| lits(&o.text))
                    .collect::<Vec<_>>()
                    .iter(),
            );
            phi(&star, &lits(&summary[i].text)) != Label::Entailment
        })
        .collect()
}

fn claim_fraction(from: &[RefSentence], premise: &[RefSentence], claims: &Claims) -> f64 {
    let p = union(premise.iter().map(|s| lits(&s.text)).collect::<Vec<_>>().iter());
    let all: Vec<String> = from.iter().flat_map(|s| claims.psi(&s.text)).collect();
    if all.is_empty() {
        return 0.0;
    }
    all.iter().filter(|c| phi(&p, &lits(c)) == Label::Entailment).count() as f64 / all.len() as f64
}

pub fn expected(sample: &FactSample, system: &str, claims: &Claims, auto: bool) -> Expected {
    let ctx = Ctx::new(sample, claims);
    let sys = segment(system);
    let reference = segment(&sample.reference);
    let masks = if auto { auto_masks(&sys) } else { vec![true; sys.len()] };
    let (mut ps, mut rs, mut ais, mut acs) = (vec![], vec![], vec![], vec![]);
    let mut oracle_citations = vec![];
    for (i, s) in sys.iter().enumerate() {
        if !masks[i] {
            oracle_citations.push(None);
            continue;
        }
        let eff = sys[i..].iter().map(|x| &x.cites).find(|c| !c.is_empty()).cloned().unwrap_or_default();
        let cref = ctx.c_ref(&s.text);
        let hit = eff.intersection(&cref).count() as f64;
        ps.push(if eff.is_empty() { 0.0 } else { hit / eff.len() as f64 });
        rs.push(if cref.is_empty() { 0.0 } else { hit / cref.len() as f64 });
        ais.push(if ctx.attributable(&s.text, &s.cites) { 1.0 } else { 0.0 });
        acs.push(if ctx.attributable(&s.text, &cref) { 1.0 } else { 0.0 });
        oracle_citations.push(Some(cref));
    }
    let (cp, cr) = (avg(&ps), avg(&rs));
    let claim_precision = claim_fraction(&sys, &reference, claims);
    let claim_recall = claim_fraction(&reference, &sys, claims);
    Expected {
        masked: masks.iter().filter(|&&m| m).count(),
        masks,
        citation_precision: cp,
        citation_recall: cr,
        citation_f1: cp.zip(cr).map(|(p, r)| harmonic(p, r)),
        ais: avg(&ais),
        acs: avg(&acs),
        claim_precision,
        claim_recall,
        claim_f1: harmonic(claim_precision, claim_recall),
        oracle_citations,
    }
}

/// Redundancy, kept-claim count, correctness and completeness of one sentence.
pub fn split_quality(sentence: &str, claims: &Claims) -> (f64, f64, f64, f64) {
    let psi = claims.psi(sentence);
    let s = lits(sentence);
    let mutual = |a: &str, b: &str| {
        let (la, lb) = (lits(a), lits(b));
        (a.trim() == b.trim() || phi(&la, &lb) == Label::Entailment)
            && (a.trim() == b.trim() || phi(&lb, &la) == Label::Entailment)
    };
    let mut kept: Vec<&String> = vec![];
    for c in &psi {
        if !kept.iter().any(|k| mutual(k, c)) {
            kept.push(c);
        }
    }
    let n = psi.len() as f64;
    let correct = psi.iter().filter(|c| phi(&s, &lits(c)) == Label::Entailment).count() as f64;
    let joined = union(psi.iter().map(|c| lits(c)).collect::<Vec<_>>().iter());
    let complete = psi.len() == 1 && psi[0].trim() == sentence.trim() || phi(&joined, &s) == Label::Entailment;
    ((n - kept.len() as f64) / n, kept.len() as f64, correct / n, if complete { 1.0 } else { 0.0 })
}

/// Pooled (sentence, document) decisions over human-cited sentences:
/// evaluator cites it, human cites it.
pub fn agreement_decisions(sample: &FactSample, claims: &Claims) -> Vec<(bool, bool)> {
    let ctx = Ctx::new(sample, claims);
    let mut out = vec![];
    for s in segment(&sample.reference).iter().filter(|s| !s.cites.is_empty()) {
        let cref = ctx.c_ref(&s.text);
        for id in 1..=sample.docs.len() as u32 {
            out.push((cref.contains(&id), s.cites.contains(&id)));
        }
    }
    out
}

/// Kappa from raw counts.
pub fn kappa(decisions: &[(bool, bool)]) -> f64 {
    let n = decisions.len() as f64;
    let agree = decisions.iter().filter(|(a, b)| a == b).count() as f64 / n;
    let a_yes = decisions.iter().filter(|d| d.0).count() as f64 / n;
    let b_yes = decisions.iter().filter(|d| d.1).count() as f64 / n;
    let chance = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
    if chance == 1.0 {
        1.0
    } else {
        (agree - chance) / (1.0 - chance)
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

pub fn close_opt(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => close(x, y),
        (None, None) => true,
        _ => false,
    }
}

pub fn write_oracle(oracle: &TableOracle, dir: &Path) -> PathBuf {
    let path = dir.join("oracle.json");
    std::fs::write(&path, serde_json::to_vec(&oracle.to_fixture()).unwrap()).unwrap();
    path
}

pub fn expected_table(samples: &[FactSample], claims: &Claims, auto: bool) -> BTreeMap<String, Expected> {
    samples
        .iter()
        .filter_map(|s| s.prediction.as_ref().map(|p| (s.id.clone(), expected(s, p, claims, auto))))
        .collect()
}
