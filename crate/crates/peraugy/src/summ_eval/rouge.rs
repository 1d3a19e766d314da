//! Skip-bigram overlap scoring: ordered in-sentence token pairs with at most
//! four tokens between them, matched as clipped multisets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::split_sentences;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Lowercases and splits on non-alphanumeric runs; no stemming, no stopword
/// removal.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

type UnitCounts = BTreeMap<(String, Option<String>), usize>;

/// Multiset of a text's units: skip-bigrams per sentence, plus unigrams when
/// asked for. A unigram is keyed with a `None` second slot.
fn units(text: &str, include_unigrams: bool) -> UnitCounts {
    let mut counts = UnitCounts::new();
    for sentence in split_sentences(text) {
        let tokens = tokenize(&sentence);
        for i in 0..tokens.len() {
            if include_unigrams {
                *counts.entry((tokens[i].clone(), None)).or_insert(0) += 1;
            }
            // at most four tokens may sit between the pair
            for j in i + 1..tokens.len().min(i + 6) {
                *counts.entry((tokens[i].clone(), Some(tokens[j].clone()))).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Skip-bigram precision, recall, and F1 of `generated` against `reference`.
/// Zero denominators (empty or single-token texts) give zeros rather than
/// errors.
pub fn rouge_su4(generated: &str, reference: &str, include_unigrams: bool) -> RougeScores {
    let gen_units = units(generated, include_unigrams);
    let ref_units = units(reference, include_unigrams);
    let gen_total: usize = gen_units.values().sum();
    let ref_total: usize = ref_units.values().sum();
    let matched: usize = gen_units
        .iter()
        .filter_map(|(unit, n)| ref_units.get(unit).map(|m| (*n).min(*m)))
        .sum();

    let precision = if gen_total == 0 { 0.0 } else { matched as f64 / gen_total as f64 };
    let recall = if ref_total == 0 { 0.0 } else { matched as f64 / ref_total as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RougeScores { precision, recall, f1 }
}
