//! Sentence segmentation and inline citation marker parsing.
//!
//! Markers are matched on the raw summary first and removed; sentence
//! boundaries are then found on the stripped text. A marker belongs to the
//! last sentence that starts strictly before it, so markers that follow a
//! sentence terminator are absorbed by the preceding sentence and markers
//! inside a sentence attach to that sentence.

use std::collections::BTreeSet;
use std::ops::Range;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Document ids are 1-based citation indices.
pub type DocId = u32;

#[derive(Debug, Error)]
pub enum MarkerConfigError {
    #[error("invalid marker pattern `{pattern}`: {source}")]
    Pattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("marker pattern `{0}` has no capture group for the id list")]
    NoCapture(String),
}

/// Citation marker grammar. Each pattern must capture the id list in its
/// first group; ids inside the list are separated by any non-digit run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarkerConfig {
    pub patterns: Vec<String>,
}

impl Default for MarkerConfig {
    fn default() -> Self {
        Self {
            patterns: vec![
                r"\[\s*(\d+(?:\s*[,，、]\s*\d+)*)\s*\]".to_string(),
                r"【\s*(\d+(?:\s*[,，、]\s*\d+)*)\s*】".to_string(),
            ],
        }
    }
}

/// Compiled form of [`MarkerConfig`].
#[derive(Debug, Clone)]
pub struct MarkerGrammar {
    patterns: Vec<Regex>,
    lookalike: Regex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marker {
    pub span: Range<usize>,
    pub ids: Vec<DocId>,
}

impl MarkerGrammar {
    pub fn new(config: &MarkerConfig) -> Result<Self, MarkerConfigError> {
        let mut patterns = Vec::with_capacity(config.patterns.len());
        for p in &config.patterns {
            let re = Regex::new(p).map_err(|source| MarkerConfigError::Pattern {
                pattern: p.clone(),
                source,
            })?;
            if re.captures_len() < 2 {
                return Err(MarkerConfigError::NoCapture(p.clone()));
            }
            patterns.push(re);
        }
        Ok(Self {
            patterns,
            lookalike: Regex::new(r"[\[【]\s*[0-9][^\[\]【】\n]{0,16}[\]】]").unwrap(),
        })
    }

    /// Non-overlapping markers in order of position. Matches whose id list
    /// contains 0 or an unrepresentable number are not markers.
    pub fn find(&self, text: &str) -> Vec<Marker> {
        let mut found: Vec<Marker> = Vec::new();
        for re in &self.patterns {
            for caps in re.captures_iter(text) {
                let whole = caps.get(0).unwrap();
                let Some(list) = caps.get(1) else { continue };
                if let Some(ids) = parse_id_list(list.as_str()) {
                    found.push(Marker {
                        span: whole.range(),
                        ids,
                    });
                }
            }
        }
        found.sort_by(|a, b| {
            a.span
                .start
                .cmp(&b.span.start)
                .then(b.span.end.cmp(&a.span.end))
        });
        let mut out: Vec<Marker> = Vec::with_capacity(found.len());
        for m in found {
            if out.last().is_none_or(|prev| m.span.start >= prev.span.end) {
                out.push(m);
            }
        }
        out
    }

    /// Bracketed digit runs that look like citations but did not parse.
    fn unparsed(&self, text: &str, markers: &[Marker]) -> Vec<String> {
        self.lookalike
            .find_iter(text)
            .filter(|m| {
                !markers
                    .iter()
                    .any(|k| k.span.start < m.end() && m.start() < k.span.end)
            })
            .map(|m| format!("unparsed citation marker `{}` at byte {}", m.as_str(), m.start()))
            .collect()
    }
}

impl Default for MarkerGrammar {
    fn default() -> Self {
        Self::new(&MarkerConfig::default()).expect("default marker grammar compiles")
    }
}

fn parse_id_list(list: &str) -> Option<Vec<DocId>> {
    let mut ids = Vec::new();
    for part in list.split(|c: char| !c.is_ascii_digit()).filter(|s| !s.is_empty()) {
        let id: DocId = part.parse().ok()?;
        if id == 0 {
            return None;
        }
        ids.push(id);
    }
    (!ids.is_empty()).then_some(ids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    /// Sentence text with markers removed and surrounding whitespace trimmed.
    pub text: String,
    pub citations: BTreeSet<DocId>,
    /// Byte range in the original markup, covering the sentence and the
    /// markers attached to it.
    pub raw_span: Range<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedSummary {
    pub sentences: Vec<Sentence>,
    pub plain_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ParsedSummary {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn citation_sets(&self) -> Vec<BTreeSet<DocId>> {
        self.sentences.iter().map(|s| s.citations.clone()).collect()
    }

    pub fn masks(&self) -> Option<Vec<bool>> {
        self.sentences.iter().map(|s| s.mask).collect()
    }

    pub fn set_masks(&mut self, masks: &[bool]) {
        for (s, &m) in self.sentences.iter_mut().zip(masks) {
            s.mask = Some(m);
        }
    }

    /// Re-serialize as markup: one sentence per line, citations as `[k]`
    /// runs after the sentence text.
    pub fn to_markup(&self) -> String {
        self.sentences
            .iter()
            .map(|s| {
                let mut line = s.text.clone();
                for id in &s.citations {
                    line.push_str(&format!("[{id}]"));
                }
                line
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Remove every citation marker, keeping all other characters in order.
/// Stripping repeats until no marker remains, so the result is a fixpoint.
pub fn strip_markers(markup: &str, grammar: &MarkerGrammar) -> String {
    strip_with_map(markup, grammar).0
}

type Stripped = (String, Vec<usize>, Vec<(usize, Vec<DocId>)>);

/// Stripped text, a byte map from stripped offsets (inclusive of the end
/// offset) to markup offsets, and every removed marker as
/// `(markup offset, ids)`.
fn strip_with_map(markup: &str, grammar: &MarkerGrammar) -> Stripped {
    let mut text = markup.to_string();
    let mut map: Vec<usize> = (0..=markup.len()).collect();
    let mut removed = Vec::new();
    loop {
        let found = grammar.find(&text);
        if found.is_empty() {
            break;
        }
        let mut next = String::with_capacity(text.len());
        let mut next_map = Vec::with_capacity(map.len());
        let mut cursor = 0;
        for m in found {
            next.push_str(&text[cursor..m.span.start]);
            next_map.extend_from_slice(&map[cursor..m.span.start]);
            removed.push((map[m.span.start], m.ids));
            cursor = m.span.end;
        }
        next.push_str(&text[cursor..]);
        next_map.extend_from_slice(&map[cursor..]);
        text = next;
        map = next_map;
    }
    removed.sort_by_key(|(pos, _)| *pos);
    (text, map, removed)
}

pub fn segment_summary(markup: &str, grammar: &MarkerGrammar) -> ParsedSummary {
    let markers = grammar.find(markup);
    let mut warnings = grammar.unparsed(markup, &markers);
    let (plain, pos_map, removed) = strip_with_map(markup, grammar);

    let pieces = split_pieces(&plain);
    let mut sentences: Vec<Sentence> = pieces
        .iter()
        .enumerate()
        .map(|(index, piece)| Sentence {
            index,
            text: plain[piece.clone()].trim().to_string(),
            citations: BTreeSet::new(),
            raw_span: 0..0,
            mask: None,
        })
        .collect();
    let starts: Vec<usize> = pieces
        .iter()
        .map(|p| p.start + (plain[p.clone()].len() - plain[p.clone()].trim_start().len()))
        .collect();

    if sentences.is_empty() {
        if !removed.is_empty() {
            warnings.push("citation markers found in a summary without sentence text".to_string());
        }
        return ParsedSummary {
            sentences,
            plain_text: plain,
            warnings,
        };
    }

    // pos_map is monotone, so comparing in markup offsets is equivalent to
    // comparing in stripped offsets
    for (at, ids) in &removed {
        let owner = starts
            .iter()
            .rposition(|&s| pos_map[s] < *at)
            .unwrap_or(0);
        sentences[owner].citations.extend(ids.iter().copied());
    }

    let first_non_ws = markup.len() - markup.trim_start().len();
    let n = sentences.len();
    for i in 0..n {
        let begin = if i == 0 { first_non_ws } else { pos_map[starts[i]] };
        let end = if i + 1 < n {
            pos_map[starts[i + 1]]
        } else {
            markup.len()
        };
        let end = begin + markup[begin..end].trim_end().len();
        sentences[i].raw_span = begin..end;
    }

    ParsedSummary {
        sentences,
        plain_text: plain,
        warnings,
    }
}

const CJK_TERMINATORS: &[char] = &['。', '！', '？', '；', '…'];
const LATIN_TERMINATORS: &[char] = &['!', '?', '.'];
const CLOSERS: &[char] = &['”', '’', '"', '\'', '）', ')', '」', '』', '》'];

/// Partition `text` into sentence pieces. The pieces are contiguous and
/// cover the whole input; whitespace between sentences stays at the start
/// of the following piece. Pieces without any alphanumeric character are
/// merged into their predecessor. Whitespace-only input yields no pieces.
pub fn split_pieces(text: &str) -> Vec<Range<usize>> {
    let mut bounds = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((_, c)) = iter.next() {
        let is_cjk = CJK_TERMINATORS.contains(&c);
        let is_latin = LATIN_TERMINATORS.contains(&c);
        if c == '\n' {
            bounds.push(iter.peek().map_or(text.len(), |&(j, _)| j));
            continue;
        }
        if !is_cjk && !is_latin {
            continue;
        }
        let mut any_cjk = is_cjk;
        while let Some(&(_, next)) = iter.peek() {
            if CJK_TERMINATORS.contains(&next) || LATIN_TERMINATORS.contains(&next) {
                any_cjk |= CJK_TERMINATORS.contains(&next);
                iter.next();
            } else if CLOSERS.contains(&next) {
                iter.next();
            } else {
                break;
            }
        }
        let end = iter.peek().map_or(text.len(), |&(j, _)| j);
        if any_cjk || latin_boundary(&text[end..]) {
            bounds.push(end);
        }
    }

    let mut pieces: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    for b in bounds.into_iter().chain(std::iter::once(text.len())) {
        if b <= start {
            continue;
        }
        push_piece(&mut pieces, text, start..b);
        start = b;
    }
    if pieces.len() == 1 && text[pieces[0].clone()].trim().is_empty() {
        pieces.clear();
    }
    pieces
}

fn push_piece(pieces: &mut Vec<Range<usize>>, text: &str, piece: Range<usize>) {
    let body = &text[piece.clone()];
    if body.trim().is_empty() {
        match pieces.last_mut() {
            Some(last) => last.end = piece.end,
            // leading whitespace waits for the first real sentence
            None => pieces.push(piece),
        }
        return;
    }
    let has_content = |s: &str| s.chars().any(char::is_alphanumeric);
    match pieces.last_mut() {
        Some(last) if !has_content(body) || !has_content(&text[last.clone()]) => {
            last.end = piece.end
        }
        _ => pieces.push(piece),
    }
}

/// A Latin terminator ends a sentence at end of text, or when followed by
/// whitespace and then something other than a lowercase letter, or when
/// directly followed by CJK text.
fn latin_boundary(rest: &str) -> bool {
    let mut chars = rest.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_whitespace() => match rest.trim_start().chars().next() {
            None => true,
            Some(n) => !n.is_lowercase(),
        },
        Some(c) => crate::text::is_cjk_letter(c),
    }
}
