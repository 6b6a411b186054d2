//! Dataset ingestion, corpus statistics and page chunking.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::segmenter::{segment_summary, split_pieces, DocId, MarkerGrammar};
use crate::text::text_length;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    /// Premise text used for entailment.
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    /// Full page content, when the record carries it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub query: String,
    pub documents: Vec<Document>,
    /// Reference summary with inline citation markers.
    pub summary_markup: String,
    /// Per-sentence human citation sets, aligned with the segmented reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_citations: Option<Vec<BTreeSet<DocId>>>,
    /// Per-document human-extracted spans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_extraction: Option<Vec<Vec<String>>>,
}

impl Sample {
    pub fn document(&self, id: DocId) -> Option<&Document> {
        // ids are contiguous from 1
        self.documents
            .get((id as usize).wrapping_sub(1))
            .filter(|d| d.id == id)
            .or_else(|| self.documents.iter().find(|d| d.id == id))
    }

    pub fn document_ids(&self) -> BTreeSet<DocId> {
        self.documents.iter().map(|d| d.id).collect()
    }
}

/// Field-name mapping from a dataset's records onto [`Sample`]. Each entry
/// is a list of candidate keys tried in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSchema {
    pub id: Vec<String>,
    /// Use `line-N` as the id when no id field is present.
    pub id_from_line: bool,
    pub query: Vec<String>,
    pub documents: Vec<String>,
    pub summary: Vec<String>,
    pub human_citations: Vec<String>,
    pub human_extraction: Vec<String>,
    pub doc_title: Vec<String>,
    pub doc_url: Vec<String>,
    pub doc_snippet: Vec<String>,
    pub doc_content: Vec<String>,
    /// Keys tried for the premise text, in priority order.
    pub doc_text: Vec<String>,
}

fn keys(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self::canonical()
    }
}

impl DatasetSchema {
    pub fn canonical() -> Self {
        Self {
            id: keys(&["id"]),
            id_from_line: false,
            query: keys(&["query"]),
            documents: keys(&["documents"]),
            summary: keys(&["summary"]),
            human_citations: keys(&["human_citations"]),
            human_extraction: keys(&["human_extraction"]),
            doc_title: keys(&["title"]),
            doc_url: keys(&["url"]),
            doc_snippet: keys(&["snippet"]),
            doc_content: keys(&["content"]),
            doc_text: keys(&["text", "content", "snippet"]),
        }
    }

    /// Tolerant preset for the released corpus files.
    pub fn webcites() -> Self {
        Self {
            id: keys(&["id", "sample_id", "qid", "query_id"]),
            id_from_line: true,
            query: keys(&["query", "question"]),
            documents: keys(&["documents", "docs", "search_results", "passages"]),
            summary: keys(&["summary", "answer", "output", "target", "response"]),
            human_citations: keys(&["human_citations", "citations"]),
            human_extraction: keys(&["human_extraction", "extraction", "extracted"]),
            doc_title: keys(&["title"]),
            doc_url: keys(&["url", "link"]),
            doc_snippet: keys(&["snippet", "abstract"]),
            doc_content: keys(&["content", "full_content", "text"]),
            doc_text: keys(&["text", "content", "full_content", "snippet"]),
        }
    }

    /// `canonical`, `webcites`, or a path to a TOML schema file.
    pub fn from_descriptor(descriptor: &str) -> Result<Self, DatasetError> {
        match descriptor {
            "canonical" => Ok(Self::canonical()),
            "webcites" => Ok(Self::webcites()),
            path => {
                let raw = fs::read_to_string(path).map_err(|source| DatasetError::Io {
                    path: PathBuf::from(path),
                    source,
                })?;
                toml::from_str(&raw).map_err(|e| DatasetError::Schema(format!("{path}: {e}")))
            }
        }
    }

    /// Prefer a document field (`snippet`, `content`, ...) for the premise.
    pub fn prefer_doc_text(mut self, field: &str) -> Self {
        self.doc_text.retain(|k| k != field);
        self.doc_text.insert(0, field.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordErrorKind {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("record is not a JSON object")]
    NotAnObject,
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{0}` has the wrong type")]
    WrongType(&'static str),
    #[error("no documents")]
    EmptyDocuments,
    #[error("document {0} has no text")]
    EmptyDocumentText(DocId),
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("dangling citation {id}: sample has {docs} documents")]
    DanglingCitation { id: DocId, docs: usize },
    #[error("human citations cover {got} sentences, summary has {expected}")]
    HumanCitationLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct RecordError {
    pub line: usize,
    pub kind: RecordErrorKind,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {} invalid record(s); first: {}", path.display(), errors.len(), errors[0])]
    Invalid {
        path: PathBuf,
        errors: Vec<RecordError>,
    },
    #[error("schema: {0}")]
    Schema(String),
}

/// Load a JSON-lines dataset (or a single JSON array) in file order.
/// Every malformed record is reported with its line number.
pub fn load_dataset(
    path: &Path,
    schema: &DatasetSchema,
    grammar: &MarkerGrammar,
) -> Result<Vec<Sample>, DatasetError> {
    let raw = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (samples, errors) = parse_dataset(&raw, schema, grammar);
    if errors.is_empty() {
        Ok(samples)
    } else {
        Err(DatasetError::Invalid {
            path: path.to_path_buf(),
            errors,
        })
    }
}

pub fn parse_dataset(
    raw: &str,
    schema: &DatasetSchema,
    grammar: &MarkerGrammar,
) -> (Vec<Sample>, Vec<RecordError>) {
    let records: Vec<(usize, Result<Value, String>)> = if raw.trim_start().starts_with('[') {
        match serde_json::from_str::<Vec<Value>>(raw) {
            Ok(values) => values.into_iter().enumerate().map(|(i, v)| (i + 1, Ok(v))).collect(),
            Err(e) => vec![(e.line(), Err(e.to_string()))],
        }
    } else {
        raw.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, serde_json::from_str(l).map_err(|e| e.to_string())))
            .collect()
    };

    let mut samples = Vec::with_capacity(records.len());
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (line, value) in records {
        let result = value
            .map_err(RecordErrorKind::Json)
            .and_then(|v| record_to_sample(&v, line, schema, grammar));
        match result {
            Ok(sample) if !seen.insert(sample.sample_id.clone()) => errors.push(RecordError {
                line,
                kind: RecordErrorKind::DuplicateId(sample.sample_id),
            }),
            Ok(sample) => samples.push(sample),
            Err(kind) => errors.push(RecordError { line, kind }),
        }
    }
    (samples, errors)
}

fn lookup<'a>(obj: &'a Map<String, Value>, names: &[String]) -> Option<&'a Value> {
    names.iter().find_map(|k| obj.get(k).filter(|v| !v.is_null()))
}

fn opt_string(obj: &Map<String, Value>, names: &[String]) -> Option<String> {
    lookup(obj, names).and_then(|v| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    })
}

fn req_string(
    obj: &Map<String, Value>,
    names: &[String],
    field: &'static str,
) -> Result<String, RecordErrorKind> {
    match lookup(obj, names) {
        None => Err(RecordErrorKind::MissingField(field)),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(RecordErrorKind::WrongType(field)),
    }
}

fn record_to_sample(
    value: &Value,
    line: usize,
    schema: &DatasetSchema,
    grammar: &MarkerGrammar,
) -> Result<Sample, RecordErrorKind> {
    let obj = value.as_object().ok_or(RecordErrorKind::NotAnObject)?;
    let sample_id = match opt_string(obj, &schema.id) {
        Some(id) => id,
        None if schema.id_from_line => format!("line-{line}"),
        None => return Err(RecordErrorKind::MissingField("id")),
    };
    let query = req_string(obj, &schema.query, "query")?;
    let summary_markup = req_string(obj, &schema.summary, "summary")?;
    let docs = match lookup(obj, &schema.documents) {
        None => return Err(RecordErrorKind::MissingField("documents")),
        Some(Value::Array(a)) => a,
        Some(_) => return Err(RecordErrorKind::WrongType("documents")),
    };
    if docs.is_empty() {
        return Err(RecordErrorKind::EmptyDocuments);
    }
    let mut documents = Vec::with_capacity(docs.len());
    for (i, d) in docs.iter().enumerate() {
        let id = (i + 1) as DocId;
        let doc = match d {
            // bare strings are taken as the document text
            Value::String(s) => Document {
                id,
                text: s.clone(),
                title: None,
                url: None,
                snippet: None,
                content: None,
            },
            Value::Object(o) => Document {
                id,
                text: schema
                    .doc_text
                    .iter()
                    .filter_map(|k| o.get(k).and_then(Value::as_str))
                    .find(|s| !s.trim().is_empty())
                    .unwrap_or_default()
                    .to_string(),
                title: opt_string(o, &schema.doc_title),
                url: opt_string(o, &schema.doc_url),
                snippet: opt_string(o, &schema.doc_snippet),
                content: opt_string(o, &schema.doc_content),
            },
            _ => return Err(RecordErrorKind::WrongType("documents")),
        };
        if doc.text.trim().is_empty() {
            return Err(RecordErrorKind::EmptyDocumentText(id));
        }
        documents.push(doc);
    }
    let n_docs = documents.len();
    let check = |id: DocId| {
        if id as usize > n_docs {
            Err(RecordErrorKind::DanglingCitation { id, docs: n_docs })
        } else {
            Ok(())
        }
    };

    let human_citations = match lookup(obj, &schema.human_citations) {
        None => None,
        Some(v) => Some(
            serde_json::from_value::<Vec<BTreeSet<DocId>>>(v.clone())
                .map_err(|_| RecordErrorKind::WrongType("human_citations"))?,
        ),
    };
    let human_extraction = match lookup(obj, &schema.human_extraction) {
        None => None,
        Some(v) => Some(
            serde_json::from_value::<Vec<Vec<String>>>(v.clone())
                .map_err(|_| RecordErrorKind::WrongType("human_extraction"))?,
        ),
    };

    let parsed = segment_summary(&summary_markup, grammar);
    for s in &parsed.sentences {
        s.citations.iter().try_for_each(|&id| check(id))?;
    }
    if let Some(hc) = &human_citations {
        hc.iter().flatten().try_for_each(|&id| check(id))?;
        if hc.len() != parsed.len() {
            return Err(RecordErrorKind::HumanCitationLength {
                expected: parsed.len(),
                got: hc.len(),
            });
        }
    }

    Ok(Sample {
        sample_id,
        query,
        documents,
        summary_markup,
        human_citations,
        human_extraction,
    })
}

/// One record in the canonical input format.
pub fn to_canonical_record(sample: &Sample) -> Value {
    let docs: Vec<Value> = sample
        .documents
        .iter()
        .map(|d| {
            let mut o = Map::new();
            o.insert("text".into(), Value::String(d.text.clone()));
            for (k, v) in [
                ("title", &d.title),
                ("url", &d.url),
                ("snippet", &d.snippet),
                ("content", &d.content),
            ] {
                if let Some(v) = v {
                    o.insert(k.into(), Value::String(v.clone()));
                }
            }
            Value::Object(o)
        })
        .collect();
    let mut o = Map::new();
    o.insert("id".into(), Value::String(sample.sample_id.clone()));
    o.insert("query".into(), Value::String(sample.query.clone()));
    o.insert("documents".into(), Value::Array(docs));
    o.insert("summary".into(), Value::String(sample.summary_markup.clone()));
    if let Some(hc) = &sample.human_citations {
        o.insert("human_citations".into(), serde_json::to_value(hc).unwrap());
    }
    if let Some(he) = &sample.human_extraction {
        o.insert("human_extraction".into(), serde_json::to_value(he).unwrap());
    }
    Value::Object(o)
}

pub fn write_dataset(path: &Path, samples: &[Sample]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for s in samples {
        serde_json::to_writer(&mut out, &to_canonical_record(s))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sample_count: usize,
    pub docs_per_query: f64,
    /// Mean premise length (characters for CJK text, words otherwise).
    pub doc_length: f64,
    /// Mean summary length after marker removal.
    pub summary_length: f64,
    pub sentences_per_summary: f64,
    /// Citations per sentence, pooled over every sentence in the corpus.
    pub citations_per_sentence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_length: Option<f64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Corpus statistics. All sums are integer so the result does not depend
/// on sample order.
pub fn corpus_stats(samples: &[Sample], grammar: &MarkerGrammar) -> Result<CorpusStats, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let (mut docs, mut doc_len, mut summary_len, mut sentences, mut citations) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let (mut snippets, mut snippet_len, mut contents, mut content_len) = (0u64, 0u64, 0u64, 0u64);
    for s in samples {
        docs += s.documents.len() as u64;
        for d in &s.documents {
            doc_len += text_length(&d.text) as u64;
            if let Some(sn) = &d.snippet {
                snippets += 1;
                snippet_len += text_length(sn) as u64;
            }
            if let Some(c) = &d.content {
                contents += 1;
                content_len += text_length(c) as u64;
            }
        }
        let parsed = segment_summary(&s.summary_markup, grammar);
        summary_len += text_length(&parsed.plain_text) as u64;
        sentences += parsed.len() as u64;
        citations += parsed.sentences.iter().map(|x| x.citations.len() as u64).sum::<u64>();
    }
    let n = samples.len() as u64;
    Ok(CorpusStats {
        sample_count: samples.len(),
        docs_per_query: ratio(docs, n),
        doc_length: ratio(doc_len, docs),
        summary_length: ratio(summary_len, n),
        sentences_per_summary: ratio(sentences, n),
        citations_per_sentence: ratio(citations, sentences),
        snippet_length: (snippets > 0).then(|| ratio(snippet_len, snippets)),
        content_length: (contents > 0).then(|| ratio(content_len, contents)),
    })
}

/// Split a page into passages of at most `max_len` characters, packing
/// whole sentences greedily left to right. A sentence longer than
/// `max_len` is hard-split; its pieces pack like any other unit. The
/// passages concatenate back to `page_text`.
pub fn chunk_page(page_text: &str, max_len: usize) -> Vec<String> {
    assert!(max_len >= 1, "max_len must be positive");
    if page_text.is_empty() {
        return Vec::new();
    }
    let mut pieces = split_pieces(page_text);
    if pieces.is_empty() {
        pieces.push(0..page_text.len());
    }

    let mut units: Vec<&str> = Vec::new();
    for p in pieces {
        let piece = &page_text[p];
        if piece.chars().count() <= max_len {
            units.push(piece);
            continue;
        }
        let mut rest = piece;
        while !rest.is_empty() {
            let cut = rest.char_indices().nth(max_len).map_or(rest.len(), |(i, _)| i);
            units.push(&rest[..cut]);
            rest = &rest[cut..];
        }
    }

    let mut out = Vec::new();
    let mut current = String::new();
    let mut current_len = 0;
    for unit in units {
        let len = unit.chars().count();
        if current_len > 0 && current_len + len > max_len {
            out.push(std::mem::take(&mut current));
            current_len = 0;
        }
        current.push_str(unit);
        current_len += len;
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Replace each sample's documents by the passages of their full content
/// (falling back to the premise text), re-indexed 1..n in page order.
/// Human citations refer to the old ids and are dropped.
pub fn chunk_sample(sample: &Sample, max_len: usize) -> Sample {
    let mut documents = Vec::new();
    for d in &sample.documents {
        let page = d.content.as_deref().unwrap_or(&d.text);
        for passage in chunk_page(page, max_len) {
            if passage.trim().is_empty() {
                continue;
            }
            documents.push(Document {
                id: documents.len() as DocId + 1,
                text: passage,
                title: d.title.clone(),
                url: d.url.clone(),
                snippet: None,
                content: None,
            });
        }
    }
    Sample {
        sample_id: sample.sample_id.clone(),
        query: sample.query.clone(),
        documents,
        summary_markup: sample.summary_markup.clone(),
        human_citations: None,
        human_extraction: None,
    }
}
