//! PENS-styled impression logs: TSV parsing, trajectory construction, and
//! gold-summary s-node injection.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use crate::uig::{Action, DocRecord, Event, SummaryRecord, Trajectory, Uig};

use super::{split_sentences, BuildReport, IngestError, RowIssue};

/// Header names in a behaviors TSV; release variants rename columns, so the
/// mapping is configurable.
#[derive(Debug, Clone)]
pub struct PensColumns {
    pub uid: String,
    pub tmp: String,
    pub clk_news: String,
    pub uclk_news: String,
    pub clked_his: String,
}

impl Default for PensColumns {
    fn default() -> Self {
        PensColumns {
            uid: "uID".into(),
            tmp: "tmp".into(),
            clk_news: "clkNews".into(),
            uclk_news: "uclkNews".into(),
            clked_his: "clkedHis".into(),
        }
    }
}

/// One impression-log row. Id lists are space-separated in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PensImpressionRow {
    pub uid: String,
    pub tmp: String,
    pub clk_news: Vec<String>,
    pub uclk_news: Vec<String>,
    pub clked_his: Vec<String>,
}

fn split_ids(field: &str) -> Vec<String> {
    field.split_whitespace().map(str::to_string).collect()
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
}

pub fn parse_pens_tsv(reader: impl Read, cols: &PensColumns) -> Result<Vec<PensImpressionRow>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let i_uid = header_index(&headers, &cols.uid)?;
    let i_tmp = header_index(&headers, &cols.tmp)?;
    let i_clk = header_index(&headers, &cols.clk_news)?;
    let i_uclk = header_index(&headers, &cols.uclk_news)?;
    let i_his = header_index(&headers, &cols.clked_his)?;

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        rows.push(PensImpressionRow {
            uid: field(i_uid).to_string(),
            tmp: field(i_tmp).to_string(),
            clk_news: split_ids(field(i_clk)),
            uclk_news: split_ids(field(i_uclk)),
            clked_his: split_ids(field(i_his)),
        });
    }
    Ok(rows)
}

/// Header names in a news TSV; topic and body columns are optional.
#[derive(Debug, Clone)]
pub struct NewsColumns {
    pub id: String,
    pub topic: String,
    pub title: String,
    pub body: String,
}

impl Default for NewsColumns {
    fn default() -> Self {
        NewsColumns {
            id: "News ID".into(),
            topic: "Category".into(),
            title: "Headline".into(),
            body: "News body".into(),
        }
    }
}

pub fn parse_news_tsv(reader: impl Read, cols: &NewsColumns) -> Result<BTreeMap<String, DocRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let i_id = header_index(&headers, &cols.id)?;
    let i_title = header_index(&headers, &cols.title)?;
    let i_topic = headers.iter().position(|h| h == cols.topic);
    let i_body = headers.iter().position(|h| h == cols.body);

    let mut docs = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let id = field(i_id).to_string();
        if id.is_empty() {
            continue;
        }
        docs.insert(
            id.clone(),
            DocRecord {
                id,
                title: field(i_title).to_string(),
                body: i_body.map(|i| split_sentences(field(i))).unwrap_or_default(),
                topic: i_topic.map(|i| field(i).to_string()).filter(|t| !t.is_empty()),
            },
        );
    }
    Ok(docs)
}

/// Timestamp comparator: all-digit strings compare numerically (by length,
/// then lexicographically), anything else falls back to string order.
fn tmp_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if digits(a) && digits(b) {
        let a = a.trim_start_matches('0');
        let b = b.trim_start_matches('0');
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    } else {
        a.cmp(b)
    }
}

/// Replays impression rows into one click/skip trajectory per user: the
/// running click history forms a deduplicated prefix, then each row (in
/// timestamp order) contributes its clicks and skips in file position.
/// Rows touching an unknown doc are skipped and reported. No s-nodes yet.
pub fn build_uig_pens(rows: &[PensImpressionRow], docs: &BTreeMap<String, DocRecord>) -> (Uig, BuildReport) {
    let mut report = BuildReport::default();
    let mut by_user: BTreeMap<&str, Vec<(u64, &PensImpressionRow)>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        by_user.entry(&row.uid).or_default().push((i as u64 + 1, row));
    }

    let mut trajectories = Vec::new();
    for (user, mut user_rows) in by_user {
        if user.is_empty() {
            for (pos, _) in &user_rows {
                report.skipped_rows.push(RowIssue { row: *pos, user: String::new(), detail: "empty uID".into() });
            }
            continue;
        }
        user_rows.sort_by(|a, b| tmp_cmp(&a.1.tmp, &b.1.tmp));

        let mut events: Vec<Event> = Vec::new();
        let mut clicked: BTreeSet<&str> = BTreeSet::new();
        for (pos, row) in user_rows {
            let all_ids = row.clked_his.iter().chain(&row.clk_news).chain(&row.uclk_news);
            if let Some(bad) = all_ids.clone().find(|id| !docs.contains_key(*id)) {
                report.skipped_rows.push(RowIssue {
                    row: pos,
                    user: user.to_string(),
                    detail: format!("unknown doc {bad}"),
                });
                continue;
            }
            for id in &row.clked_his {
                if clicked.insert(id) {
                    events.push(Event::new(events.len() as u32, Action::Click, id));
                }
            }
            for id in &row.clk_news {
                clicked.insert(id);
                events.push(Event::new(events.len() as u32, Action::Click, id));
            }
            for id in &row.uclk_news {
                events.push(Event::new(events.len() as u32, Action::Skip, id));
            }
        }
        if events.is_empty() {
            report.warnings.push(format!("user {user}: no usable rows, trajectory dropped"));
            continue;
        }
        trajectories.push(Trajectory::seed(user, events));
    }

    (Uig::new(trajectories, docs.clone(), BTreeMap::new()), report)
}

/// One gold personalized summary; `order` is its position in the stage-2
/// source data and fixes the injection sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSummary {
    pub user: String,
    pub doc: String,
    pub text: String,
    pub order: u32,
}

/// Gold TSV: columns uID, docID, summary; order is the file position.
pub fn parse_gold_tsv(reader: impl Read) -> Result<Vec<GoldSummary>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let i_uid = header_index(&headers, "uID")?;
    let i_doc = header_index(&headers, "docID")?;
    let i_text = header_index(&headers, "summary")?;

    let mut gold = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |j: usize| record.get(j).unwrap_or("");
        gold.push(GoldSummary {
            user: field(i_uid).to_string(),
            doc: field(i_doc).to_string(),
            text: field(i_text).to_string(),
            order: i as u32,
        });
    }
    Ok(gold)
}

/// Inserts a GenSumm/SummGen pair for every gold summary directly after the
/// last occurrence of its d-node (later events shift by 2), appending
/// Click + pair at the tail when the doc never occurs. Duplicate (user, doc)
/// pairs keep the first summary. Relative order of pre-existing events is
/// preserved.
pub fn inject_snodes_pens(uig: &Uig, gold: &[GoldSummary]) -> (Uig, BuildReport) {
    let mut out = uig.clone();
    let mut report = BuildReport::default();
    let mut user_index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, t) in out.trajectories.iter().enumerate() {
        user_index.insert(t.user.clone(), i);
    }

    let mut ordered: Vec<&GoldSummary> = gold.iter().collect();
    ordered.sort_by(|a, b| a.user.cmp(&b.user).then(a.order.cmp(&b.order)));

    let mut seen_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for g in ordered {
        if !seen_pairs.insert((g.user.clone(), g.doc.clone())) {
            report
                .warnings
                .push(format!("duplicate gold pair ({}, {}): kept first", g.user, g.doc));
            continue;
        }
        if !out.docs.contains_key(&g.doc) {
            report.warnings.push(format!("gold pair ({}, {}): unknown doc, skipped", g.user, g.doc));
            continue;
        }
        let sid = format!("s:{}:{}", g.user, g.doc);
        out.summaries.insert(
            sid.clone(),
            SummaryRecord {
                id: sid.clone(),
                text: g.text.clone(),
                source_doc: g.doc.clone(),
                author_user: g.user.clone(),
                source_sentence: None,
            },
        );
        let ti = match user_index.get(&g.user) {
            Some(&i) => i,
            None => {
                report
                    .warnings
                    .push(format!("gold pair ({}, {}): user had no trajectory, created one", g.user, g.doc));
                out.trajectories.push(Trajectory::seed(g.user.clone(), Vec::new()));
                let i = out.trajectories.len() - 1;
                user_index.insert(g.user.clone(), i);
                i
            }
        };
        let events = &mut out.trajectories[ti].events;
        let last_occurrence = events
            .iter()
            .rposition(|e| e.kind == crate::uig::NodeKind::Doc && e.id == g.doc);
        match last_occurrence {
            Some(i) => {
                events.insert(i + 1, Event::new(0, Action::GenSumm, &g.doc));
                events.insert(i + 2, Event::new(0, Action::SummGen, &sid));
            }
            None => {
                events.push(Event::new(0, Action::Click, &g.doc));
                events.push(Event::new(0, Action::GenSumm, &g.doc));
                events.push(Event::new(0, Action::SummGen, &sid));
            }
        }
    }
    for t in &mut out.trajectories {
        for (i, ev) in t.events.iter_mut().enumerate() {
            ev.t = i as u32;
        }
    }
    (out, report)
}
