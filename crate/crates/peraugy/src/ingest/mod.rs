//! Parsers that turn PENS-styled and OpenAI-Reddit-styled source data into
//! [`Uig`](crate::uig::Uig) pools, the encoder test-set builder, and the
//! canonical JSONL round-trip format.
//!
//! Parsers are pure per row; malformed rows are collected, not thrown, unless
//! the file itself is unreadable.

mod jsonl;
mod oai;
mod pens;
mod synth;
mod testset;

pub use jsonl::{read_jsonl, read_jsonl_files, write_jsonl, write_jsonl_files, JsonlPaths};
pub use oai::{build_uig_oai, parse_oai_jsonl, OaiRatingRow};
pub use pens::{
    build_uig_pens, inject_snodes_pens, parse_gold_tsv, parse_news_tsv, parse_pens_tsv,
    GoldSummary, NewsColumns, PensColumns, PensImpressionRow,
};
pub use synth::{synth_pool, SynthConfig};
pub use testset::{build_encoder_testset, CandidateLabel, EncoderTestSet, TestsetConfig, UserTestCase};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{file} line {line}: {source}")]
    JsonLine {
        file: String,
        line: u64,
        source: serde_json::Error,
    },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("line {line}: confidence {value} outside [0, 9]")]
    BadConfidence { line: u64, value: i64 },
    #[error("threshold {0} outside [0, 9]")]
    BadThreshold(i64),
}

/// Problem tied to one input row; the row was skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    /// 1-based position in the source file.
    pub row: u64,
    pub user: String,
    pub detail: String,
}

/// Side channel for skipped rows and non-fatal warnings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub skipped_rows: Vec<RowIssue>,
    pub warnings: Vec<String>,
}

impl BuildReport {
    pub fn is_clean(&self) -> bool {
        self.skipped_rows.is_empty() && self.warnings.is_empty()
    }
}

/// Splits body text into stored sentences on `.`, `?`, `!` runs followed by
/// whitespace. This segmentation is the ground truth for sentence keys; no
/// re-tokenization happens downstream.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'?' | b'!') {
            let mut j = i + 1;
            while j < bytes.len() && matches!(bytes[j], b'.' | b'?' | b'!') {
                j += 1;
            }
            if j >= bytes.len() || bytes[j].is_ascii_whitespace() {
                let sent = text[start..j].trim();
                if !sent.is_empty() {
                    out.push(sent.to_string());
                }
                start = j;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_terminators() {
        assert_eq!(
            split_sentences("First one. Second two! Third?"),
            vec!["First one.", "Second two!", "Third?"]
        );
    }

    #[test]
    fn keeps_inner_dots_and_trailing_fragment() {
        assert_eq!(
            split_sentences("Version 1.2 shipped... Then what"),
            vec!["Version 1.2 shipped...", "Then what"]
        );
    }

    #[test]
    fn empty_text_gives_no_sentences() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   ").is_empty());
    }
}
