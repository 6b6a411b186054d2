//! Sentence-level BLEU-4 and Self-BLEU.

use std::collections::HashMap;

use crate::segmenter::ParsedSummary;
use crate::text::bleu_tokens;

pub const MAX_ORDER: usize = 4;
/// Numerator floor for n-gram orders with no match.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU-4 of `hypothesis` against several references, on a 0-100 scale.
///
/// Clipped n-gram precisions use the maximum reference count per n-gram.
/// Orders the hypothesis is too short to contain are left out of the
/// geometric mean; orders with zero matches get a numerator of
/// [`SMOOTHING_EPSILON`]. The brevity penalty uses the reference length
/// closest to the hypothesis length (the shorter one on ties).
pub fn sentence_bleu(hypothesis: &[String], references: &[Vec<String>]) -> f64 {
    let hyp_len = hypothesis.len();
    if hyp_len == 0 || references.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=MAX_ORDER {
        if hyp_len < n {
            break;
        }
        let hyp = ngram_counts(hypothesis, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in references {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let matched: usize = hyp
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total = (hyp_len + 1 - n) as f64;
        let numerator = if matched == 0 { SMOOTHING_EPSILON } else { matched as f64 };
        log_sum += (numerator / total).ln();
        orders += 1;
    }
    let ref_len = references
        .iter()
        .map(Vec::len)
        .min_by_key(|&l| (l.abs_diff(hyp_len), l))
        .expect("non-empty references");
    let brevity = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    100.0 * brevity * (log_sum / orders as f64).exp()
}

/// Mean BLEU-4 of each sentence against all its sibling sentences. `None`
/// for summaries with fewer than two sentences.
pub fn self_bleu(parsed: &ParsedSummary) -> Option<f64> {
    if parsed.len() < 2 {
        return None;
    }
    let tokens: Vec<Vec<String>> = parsed.sentences.iter().map(|s| bleu_tokens(&s.text)).collect();
    let total: f64 = (0..tokens.len())
        .map(|i| {
            let refs: Vec<Vec<String>> = tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t.clone())
                .collect();
            sentence_bleu(&tokens[i], &refs)
        })
        .sum();
    Some(total / tokens.len() as f64)
}
