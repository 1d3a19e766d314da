//! OpenAI-Reddit-styled rating logs: JSONL parsing and seeded trajectory
//! construction.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::derive_rng;
use crate::uig::{Action, DocRecord, Event, SummaryRecord, Trajectory, Uig};

use super::{split_sentences, BuildReport, IngestError};

/// One summary rating. `ratings` maps axis name to score; `confidence` is the
/// rater's 0-9 confidence in the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OaiRatingRow {
    pub post: String,
    pub rater: String,
    pub policy: String,
    pub summary_text: String,
    pub confidence: i64,
    #[serde(default)]
    pub ratings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_text: Option<String>,
}

impl OaiRatingRow {
    /// Score used to pick the surrogate summary: the overall axis when rated,
    /// else the mean over axes, else the confidence.
    fn rating(&self) -> f64 {
        if let Some(v) = self.ratings.get("overall") {
            return *v;
        }
        if self.ratings.is_empty() {
            self.confidence as f64
        } else {
            self.ratings.values().sum::<f64>() / self.ratings.len() as f64
        }
    }
}

pub fn parse_oai_jsonl(reader: impl Read) -> Result<Vec<OaiRatingRow>, IngestError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: OaiRatingRow = serde_json::from_str(&line).map_err(|source| IngestError::JsonLine {
            file: "oai jsonl".into(),
            line: lineno,
            source,
        })?;
        if !(0..=9).contains(&row.confidence) {
            return Err(IngestError::BadConfidence { line: lineno, value: row.confidence });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Builds one trajectory per rater. A post is Clicked iff some summary of it
/// has confidence strictly above `threshold`, else Skipped; each clicked post
/// carries its highest-rated summary (ties: lowest policy name) as a
/// GenSumm/SummGen pair. Units are sequenced by a per-rater seeded shuffle,
/// so equal seeds give bit-equal pools.
pub fn build_uig_oai(rows: &[OaiRatingRow], threshold: i64, seed: u64) -> Result<(Uig, BuildReport), IngestError> {
    if !(0..=9).contains(&threshold) {
        return Err(IngestError::BadThreshold(threshold));
    }
    let report = BuildReport::default();

    let mut docs: BTreeMap<String, DocRecord> = BTreeMap::new();
    for row in rows {
        let entry = docs.entry(row.post.clone()).or_insert_with(|| DocRecord {
            id: row.post.clone(),
            title: row.post.clone(),
            body: Vec::new(),
            topic: None,
        });
        if let Some(title) = row.post_title.as_deref().filter(|t| !t.is_empty()) {
            if entry.title == entry.id {
                entry.title = title.to_string();
            }
        }
        if entry.body.is_empty() {
            if let Some(text) = &row.post_text {
                entry.body = split_sentences(text);
            }
        }
    }

    let mut by_rater: BTreeMap<&str, BTreeMap<&str, Vec<&OaiRatingRow>>> = BTreeMap::new();
    for row in rows {
        by_rater
            .entry(&row.rater)
            .or_default()
            .entry(&row.post)
            .or_default()
            .push(row);
    }

    let mut summaries = BTreeMap::new();
    let mut trajectories = Vec::new();
    for (rater, posts) in by_rater {
        let mut units: Vec<Vec<Event>> = Vec::new();
        for (post, post_rows) in posts {
            let clicked = post_rows.iter().any(|r| r.confidence > threshold);
            if !clicked {
                units.push(vec![Event::new(0, Action::Skip, post)]);
                continue;
            }
            let best = post_rows
                .iter()
                .max_by(|a, b| {
                    a.rating()
                        .partial_cmp(&b.rating())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        // ties: lowest policy name wins, so it must compare greater
                        .then_with(|| b.policy.cmp(&a.policy))
                })
                .expect("non-empty post group");
            let sid = format!("s:{rater}:{post}");
            summaries.insert(
                sid.clone(),
                SummaryRecord {
                    id: sid.clone(),
                    text: best.summary_text.clone(),
                    source_doc: post.to_string(),
                    author_user: rater.to_string(),
                    source_sentence: None,
                },
            );
            units.push(vec![
                Event::new(0, Action::Click, post),
                Event::new(0, Action::GenSumm, post),
                Event::new(0, Action::SummGen, &sid),
            ]);
        }
        let mut rng = derive_rng(seed, &["oai", rater]);
        units.shuffle(&mut rng);
        let mut events: Vec<Event> = units.into_iter().flatten().collect();
        for (i, ev) in events.iter_mut().enumerate() {
            ev.t = i as u32;
        }
        trajectories.push(Trajectory::seed(rater, events));
    }

    Ok((Uig::new(trajectories, docs, summaries), report))
}
