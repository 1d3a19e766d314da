//! Dataset diversity metrics: topics per trajectory, rate of topic change,
//! preference-shift ratios over valid intervals, and the aggregate
//! degree-of-diversity score.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{
    distance, doc_vec, summary_vec, title_vec, DistanceMetric, EmbedError, EmbeddingStore,
    EmbeddingVec,
};
use crate::uig::{DocRecord, NodeKind, Trajectory, Uig};

#[derive(Debug, thiserror::Error)]
pub enum DiversityError {
    #[error("doc {0} has no topic")]
    MissingTopic(String),
    #[error("event references unknown doc {0}")]
    MissingDoc(String),
    #[error("event references unknown summary {0}")]
    MissingSummary(String),
    #[error("trajectory of user {user} has {have} d-node events, topic-change rate needs at least 2")]
    TooFewDocEvents { user: String, have: usize },
    #[error("no trajectory qualifies for the dataset mean")]
    NoQualifyingTrajectories,
    #[error("no user has a valid interval; nothing to aggregate")]
    NoContributingUsers,
    #[error("divergence {0} is negative")]
    NegativeDivergence(f64),
    #[error("user {user}: {detail}")]
    Malformed { user: String, detail: String },
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

fn default_alpha() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityConfig {
    /// Scale regulator on the final score.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Guard added to both sides of every ratio.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub metric: DistanceMetric,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        DiversityConfig { alpha: 1.0, epsilon: 1e-8, metric: DistanceMetric::Manhattan }
    }
}

impl DiversityConfig {
    pub fn validate(&self) -> Result<(), DiversityError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(DiversityError::BadConfig(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(self.epsilon > 0.0) {
            return Err(DiversityError::BadConfig(format!("epsilon = {} (need > 0)", self.epsilon)));
        }
        Ok(())
    }
}

/// One valid interval's shift measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub user: String,
    /// Boundary time-steps (open, close), 0-based.
    pub interval: (usize, usize),
    /// Mean distance from the opening d-node to each later d-node inside.
    pub delta_d: f64,
    /// Distance between the boundary s-nodes (surrogate at the opening).
    pub delta_s: f64,
    pub deps: f64,
    /// Faithfulness ratio between the two boundaries.
    pub penalty: f64,
}

/// Per-user aggregation over that user's valid intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDiversityRecord {
    pub user: String,
    pub interval_count: usize,
    pub mean_delta_s: f64,
    /// Mean of deps * penalty over the user's intervals.
    pub mean_penalized_deps: f64,
    /// mean_delta_s * mean_penalized_deps; the user's term in the sum.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    /// Dataset mean of distinct topics per trajectory; absent when some doc
    /// lacks a topic (noted in warnings).
    pub tp: Option<f64>,
    /// Dataset mean topic-change rate; absent when no trajectory qualifies.
    pub rtc: Option<f64>,
    pub degreed: f64,
    pub per_user: Vec<UserDiversityRecord>,
    pub per_interval: Vec<IntervalRecord>,
    pub warnings: Vec<String>,
}

fn topic_of<'a>(
    docs: &'a BTreeMap<String, DocRecord>,
    id: &str,
) -> Result<&'a str, DiversityError> {
    let doc = docs.get(id).ok_or_else(|| DiversityError::MissingDoc(id.to_string()))?;
    doc.topic.as_deref().ok_or_else(|| DiversityError::MissingTopic(id.to_string()))
}

/// Distinct topics across the trajectory's d-node events.
pub fn tp(traj: &Trajectory, docs: &BTreeMap<String, DocRecord>) -> Result<usize, DiversityError> {
    let mut topics = BTreeSet::new();
    for e in &traj.events {
        if e.kind == NodeKind::Doc {
            topics.insert(topic_of(docs, &e.id)?);
        }
    }
    Ok(topics.len())
}

pub fn tp_dataset(uig: &Uig) -> Result<f64, DiversityError> {
    if uig.trajectories.is_empty() {
        return Err(DiversityError::NoQualifyingTrajectories);
    }
    let mut sum = 0.0;
    for t in &uig.trajectories {
        sum += tp(t, &uig.docs)? as f64;
    }
    Ok(sum / uig.trajectories.len() as f64)
}

/// Fraction of consecutive d-node pairs whose topics differ.
pub fn rtc(traj: &Trajectory, docs: &BTreeMap<String, DocRecord>) -> Result<f64, DiversityError> {
    let mut topics = Vec::new();
    for e in &traj.events {
        if e.kind == NodeKind::Doc {
            topics.push(topic_of(docs, &e.id)?);
        }
    }
    if topics.len() < 2 {
        return Err(DiversityError::TooFewDocEvents { user: traj.user.clone(), have: topics.len() });
    }
    let changes = topics.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(changes as f64 / (topics.len() - 1) as f64)
}

/// Mean over trajectories with at least two d-node events; the rest are
/// skipped and named in the returned warnings.
pub fn rtc_dataset(uig: &Uig) -> Result<(f64, Vec<String>), DiversityError> {
    let mut warnings = Vec::new();
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in &uig.trajectories {
        match rtc(t, &uig.docs) {
            Ok(v) => {
                sum += v;
                n += 1;
            }
            Err(DiversityError::TooFewDocEvents { user, have }) => {
                warnings.push(format!("user {user}: {have} d-node events, excluded from the topic-change mean"));
            }
            Err(e) => return Err(e),
        }
    }
    if n == 0 {
        return Err(DiversityError::NoQualifyingTrajectories);
    }
    Ok((sum / n as f64, warnings))
}

/// Min-max shift ratio: (min + eps) / (max + eps), in (0, 1], symmetric,
/// exactly 1 iff the divergences match.
pub fn deps(delta_d: f64, delta_s: f64, epsilon: f64) -> Result<f64, DiversityError> {
    for v in [delta_d, delta_s] {
        if v < 0.0 {
            return Err(DiversityError::NegativeDivergence(v));
        }
    }
    Ok((delta_d.min(delta_s) + epsilon) / (delta_d.max(delta_s) + epsilon))
}

/// Boundary time-steps for preference-shift measurement, 0-based: the first
/// d-node step opens (its title stands in for the summary the user has not
/// written yet), every real s-node step is a boundary, and intervals are
/// consecutive boundary pairs. No s-nodes means no valid intervals.
pub fn valid_intervals(traj: &Trajectory) -> Vec<(usize, usize)> {
    let Some(first_d) = traj.events.iter().position(|e| e.kind == NodeKind::Doc) else {
        return Vec::new();
    };
    let mut boundaries = vec![first_d];
    boundaries.extend(
        traj.events
            .iter()
            .enumerate()
            .filter(|(t, e)| e.kind == NodeKind::Summary && *t > first_d)
            .map(|(t, _)| t),
    );
    boundaries.windows(2).map(|w| (w[0], w[1])).collect()
}

/// The boundary's d-node embedding and s-node (or surrogate) embedding.
///
/// A d-node boundary pairs the document with its title; an s-node boundary
/// pairs the summary with the document it was generated from, one step back.
fn boundary_vecs<'a>(
    traj: &Trajectory,
    step: usize,
    uig: &Uig,
    store: &'a EmbeddingStore,
) -> Result<(&'a EmbeddingVec, &'a EmbeddingVec), DiversityError> {
    let ev = &traj.events[step];
    match ev.kind {
        NodeKind::Doc => {
            let doc = uig.docs.get(&ev.id).ok_or_else(|| DiversityError::MissingDoc(ev.id.clone()))?;
            Ok((doc_vec(store, doc)?, title_vec(store, doc)?))
        }
        NodeKind::Summary => {
            let rec = uig
                .summaries
                .get(&ev.id)
                .ok_or_else(|| DiversityError::MissingSummary(ev.id.clone()))?;
            let prev = step.checked_sub(1).map(|i| &traj.events[i]);
            let doc_id = match prev {
                Some(p) if p.kind == NodeKind::Doc => &p.id,
                _ => {
                    return Err(DiversityError::Malformed {
                        user: traj.user.clone(),
                        detail: format!("s-node at step {step} has no d-node one step back"),
                    })
                }
            };
            let doc = uig.docs.get(doc_id).ok_or_else(|| DiversityError::MissingDoc(doc_id.clone()))?;
            Ok((doc_vec(store, doc)?, summary_vec(store, rec)?))
        }
        NodeKind::User => Err(DiversityError::Malformed {
            user: traj.user.clone(),
            detail: format!("u-node at step {step}"),
        }),
    }
}

/// Measures one valid interval: mean doc divergence from the opening d-node,
/// boundary summary divergence, their min-max ratio, and the faithfulness
/// penalty between the boundaries.
pub fn deps_interval(
    traj: &Trajectory,
    interval: (usize, usize),
    uig: &Uig,
    store: &EmbeddingStore,
    cfg: &DiversityConfig,
) -> Result<IntervalRecord, DiversityError> {
    let (a, b) = interval;
    if a >= b || b >= traj.events.len() {
        return Err(DiversityError::Malformed {
            user: traj.user.clone(),
            detail: format!("interval ({a}, {b}) out of order or past the trajectory end"),
        });
    }
    let (da, sa) = boundary_vecs(traj, a, uig, store)?;
    let (db, sb) = boundary_vecs(traj, b, uig, store)?;

    // every step strictly inside lies between consecutive s-node boundaries,
    // so each one is a d-node
    let mut sum = 0.0;
    let mut n = 0usize;
    for e in &traj.events[a + 1..b] {
        if e.kind != NodeKind::Doc {
            continue;
        }
        let doc = uig.docs.get(&e.id).ok_or_else(|| DiversityError::MissingDoc(e.id.clone()))?;
        sum += distance(&cfg.metric, da, doc_vec(store, doc)?)?;
        n += 1;
    }
    let delta_d = if n == 0 { 0.0 } else { sum / n as f64 };
    let delta_s = distance(&cfg.metric, sa, sb)?;
    let value = deps(delta_d, delta_s, cfg.epsilon)?;
    let penalty = (distance(&cfg.metric, da, sa)? + cfg.epsilon)
        / (distance(&cfg.metric, db, sb)? + cfg.epsilon);
    Ok(IntervalRecord { user: traj.user.clone(), interval, delta_d, delta_s, deps: value, penalty })
}

/// Full diversity report. The headline score is
/// alpha / |U| * sum_j mean_delta_s(j) * mean(deps * penalty)(j)
/// where |U| counts only users with at least one valid interval. Topic
/// metrics ride along when topics are available.
pub fn degreed(
    uig: &Uig,
    store: &EmbeddingStore,
    cfg: &DiversityConfig,
) -> Result<DiversityReport, DiversityError> {
    cfg.validate()?;
    let mut warnings = Vec::new();

    let per_traj: Vec<(Vec<IntervalRecord>, Option<String>)> = uig
        .trajectories
        .par_iter()
        .map(|traj| {
            let intervals = valid_intervals(traj);
            if intervals.is_empty() {
                return Ok((Vec::new(), Some(format!("user {}: no valid intervals, contributes nothing", traj.user))));
            }
            let records = intervals
                .into_iter()
                .map(|iv| deps_interval(traj, iv, uig, store, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((records, None))
        })
        .collect::<Result<Vec<_>, DiversityError>>()?;

    let mut per_user = Vec::new();
    let mut per_interval = Vec::new();
    for ((records, warning), traj) in per_traj.into_iter().zip(&uig.trajectories) {
        if let Some(w) = warning {
            warnings.push(w);
            continue;
        }
        let n = records.len() as f64;
        let mean_delta_s = records.iter().map(|r| r.delta_s).sum::<f64>() / n;
        let mean_penalized_deps = records.iter().map(|r| r.deps * r.penalty).sum::<f64>() / n;
        per_user.push(UserDiversityRecord {
            user: traj.user.clone(),
            interval_count: records.len(),
            mean_delta_s,
            mean_penalized_deps,
            contribution: mean_delta_s * mean_penalized_deps,
        });
        per_interval.extend(records);
    }
    if per_user.is_empty() {
        return Err(DiversityError::NoContributingUsers);
    }
    let degreed =
        cfg.alpha / per_user.len() as f64 * per_user.iter().map(|u| u.contribution).sum::<f64>();

    let tp = match tp_dataset(uig) {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("topics-per-trajectory omitted: {e}"));
            None
        }
    };
    let rtc = match rtc_dataset(uig) {
        Ok((v, mut w)) => {
            warnings.append(&mut w);
            Some(v)
        }
        Err(e) => {
            warnings.push(format!("topic-change rate omitted: {e}"));
            None
        }
    };

    Ok(DiversityReport { tp, rtc, degreed, per_user, per_interval, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{test_embedder, EmbedKey};
    use crate::rng::derive_rng;
    use crate::uig::{Action, Event, SummaryRecord};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    const EPS: f64 = 1e-8;

    fn doc(id: &str, topic: &str) -> DocRecord {
        DocRecord {
            id: id.into(),
            title: format!("Title of {id}"),
            body: vec![format!("Body of {id}.")],
            topic: Some(topic.into()),
        }
    }

    fn click_traj(user: &str, topics: &[&str]) -> (Trajectory, BTreeMap<String, DocRecord>) {
        let mut docs = BTreeMap::new();
        let mut events = Vec::new();
        for (i, topic) in topics.iter().enumerate() {
            let id = format!("{user}-d{i}");
            docs.insert(id.clone(), doc(&id, topic));
            events.push(Event::new(i as u32, Action::Click, &id));
        }
        (Trajectory::seed(user, events), docs)
    }

    #[test]
    fn tp_counts_distinct_topics() {
        let (t, docs) = click_traj("u", &["a", "a", "b"]);
        assert_eq!(tp(&t, &docs).unwrap(), 2);
        let (t, docs) = click_traj("u", &["a", "a", "a", "a", "a"]);
        assert_eq!(tp(&t, &docs).unwrap(), 1);
    }

    #[test]
    fn tp_matches_set_size_oracle_on_random_trajectories() {
        let mut rng = derive_rng(0, &["tp-oracle"]);
        for _ in 0..200 {
            let names = ["a", "b", "c", "d"];
            let topics: Vec<&str> = (0..10).map(|_| names[rng.gen_range(0..names.len())]).collect();
            let (t, docs) = click_traj("u", &topics);
            let want: BTreeSet<&&str> = topics.iter().collect();
            assert_eq!(tp(&t, &docs).unwrap(), want.len());
        }
    }

    #[test]
    fn missing_topic_error_names_the_doc() {
        let (t, mut docs) = click_traj("u", &["a", "b"]);
        docs.get_mut("u-d1").unwrap().topic = None;
        let err = tp(&t, &docs).unwrap_err();
        assert!(matches!(err, DiversityError::MissingTopic(d) if d == "u-d1"));
    }

    #[test]
    fn rtc_boundary_values() {
        let (t, docs) = click_traj("u", &["a", "b", "a", "b"]);
        assert_eq!(rtc(&t, &docs).unwrap(), 1.0);
        let (t, docs) = click_traj("u", &["a", "a", "a"]);
        assert_eq!(rtc(&t, &docs).unwrap(), 0.0);
    }

    #[test]
    fn rtc_matches_indicator_oracle() {
        let mut rng = derive_rng(1, &["rtc-oracle"]);
        for _ in 0..200 {
            let names = ["a", "b", "c"];
            let topics: Vec<&str> = (0..10).map(|_| names[rng.gen_range(0..names.len())]).collect();
            let (t, docs) = click_traj("u", &topics);
            let mut changes = 0;
            for i in 1..topics.len() {
                if topics[i] != topics[i - 1] {
                    changes += 1;
                }
            }
            assert_relative_eq!(rtc(&t, &docs).unwrap(), changes as f64 / 9.0);
        }
    }

    #[test]
    fn rtc_needs_two_doc_events_and_dataset_mean_skips_short_ones() {
        let (short, mut docs) = click_traj("solo", &["a"]);
        let (long, docs2) = click_traj("duo", &["a", "b"]);
        docs.extend(docs2);
        let err = rtc(&short, &docs).unwrap_err();
        assert!(matches!(err, DiversityError::TooFewDocEvents { have: 1, .. }));
        let uig = Uig::new(vec![short, long], docs, BTreeMap::new());
        let (mean, warnings) = rtc_dataset(&uig).unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("solo"));
    }

    #[test]
    fn deps_closed_forms() {
        for x in [0.0, 0.5, 3.0] {
            assert_eq!(deps(x, x, EPS).unwrap(), 1.0);
        }
        assert_relative_eq!(deps(2.0, 1.0, EPS).unwrap(), (1.0 + EPS) / (2.0 + EPS));
        assert_relative_eq!(deps(0.0, 5.0, EPS).unwrap(), EPS / (5.0 + EPS));
        assert!(deps(0.0, 5.0, EPS).unwrap() < 3e-9);
        assert!(matches!(deps(-0.1, 1.0, EPS), Err(DiversityError::NegativeDivergence(_))));
    }

    proptest! {
        #[test]
        fn deps_is_symmetric_and_in_unit_interval(a in 0.0..100.0f64, b in 0.0..100.0f64) {
            let x = deps(a, b, EPS).unwrap();
            let y = deps(b, a, EPS).unwrap();
            prop_assert_eq!(x, y);
            prop_assert!(x > 0.0 && x <= 1.0);
        }
    }

    /// d0 d1 [d2 s1] d3 d4 [d5 s2] d6 in event order; s-nodes land at steps
    /// 3 and 7.
    fn two_snode_fixture() -> Uig {
        let mut docs = BTreeMap::new();
        for i in 0..7 {
            docs.insert(format!("d{i}"), doc(&format!("d{i}"), "t"));
        }
        let mut summaries = BTreeMap::new();
        for (sid, did) in [("s1", "d2"), ("s2", "d5")] {
            summaries.insert(
                sid.to_string(),
                SummaryRecord {
                    id: sid.into(),
                    text: format!("About {did}."),
                    source_doc: did.into(),
                    author_user: "u".into(),
                    source_sentence: None,
                },
            );
        }
        let events = vec![
            Event::new(0, Action::Click, "d0"),
            Event::new(1, Action::Click, "d1"),
            Event::new(2, Action::GenSumm, "d2"),
            Event::new(3, Action::SummGen, "s1"),
            Event::new(4, Action::Click, "d3"),
            Event::new(5, Action::Skip, "d4"),
            Event::new(6, Action::GenSumm, "d5"),
            Event::new(7, Action::SummGen, "s2"),
            Event::new(8, Action::Click, "d6"),
        ];
        Uig::new(vec![Trajectory::seed("u", events)], docs, summaries)
    }

    #[test]
    fn intervals_open_at_first_dnode_and_close_at_snodes() {
        let uig = two_snode_fixture();
        assert_eq!(valid_intervals(&uig.trajectories[0]), vec![(0, 3), (3, 7)]);
    }

    #[test]
    fn single_snode_gives_one_interval() {
        let events = vec![
            Event::new(0, Action::Click, "d0"),
            Event::new(1, Action::GenSumm, "d1"),
            Event::new(2, Action::SummGen, "s1"),
        ];
        assert_eq!(valid_intervals(&Trajectory::seed("u", events)), vec![(0, 2)]);
    }

    #[test]
    fn no_snodes_gives_no_intervals() {
        let (t, _) = click_traj("u", &["a", "b", "c"]);
        assert!(valid_intervals(&t).is_empty());
    }

    #[test]
    fn dense_snodes_give_unit_intervals() {
        // pair after pair: the idealized every-step case
        let events = vec![
            Event::new(0, Action::GenSumm, "d0"),
            Event::new(1, Action::SummGen, "s0"),
            Event::new(2, Action::GenSumm, "d1"),
            Event::new(3, Action::SummGen, "s1"),
            Event::new(4, Action::GenSumm, "d2"),
            Event::new(5, Action::SummGen, "s2"),
        ];
        assert_eq!(valid_intervals(&Trajectory::seed("u", events)), vec![(0, 1), (1, 3), (3, 5)]);
    }

    /// Store with fixed 2-d vectors so every distance is hand-checkable.
    fn spreadsheet_store(uig: &Uig) -> EmbeddingStore {
        let mut store = EmbeddingStore::new(2, "hand");
        let v = |x: f32, y: f32| EmbeddingVec { values: vec![x, y] };
        let pairs: Vec<(EmbedKey, EmbeddingVec)> = vec![
            (EmbedKey::Doc { id: "dA".into() }, v(0.0, 0.0)),
            (EmbedKey::text(&uig.docs["dA"].title), v(0.0, 1.0)),
            (EmbedKey::Doc { id: "dB".into() }, v(2.0, 0.0)),
            (EmbedKey::Summary { id: "sB".into() }, v(2.0, 2.0)),
            (EmbedKey::Doc { id: "dC".into() }, v(5.0, 0.0)),
            (EmbedKey::Summary { id: "sC".into() }, v(5.0, 1.0)),
        ];
        for (k, val) in pairs {
            store.insert(k, val).unwrap();
        }
        store
    }

    /// Click dA, then two summary pairs on dB and dC.
    fn spreadsheet_fixture() -> Uig {
        let mut docs = BTreeMap::new();
        for id in ["dA", "dB", "dC"] {
            docs.insert(id.to_string(), doc(id, "t"));
        }
        let mut summaries = BTreeMap::new();
        for (sid, did) in [("sB", "dB"), ("sC", "dC")] {
            summaries.insert(
                sid.to_string(),
                SummaryRecord {
                    id: sid.into(),
                    text: format!("On {did}."),
                    source_doc: did.into(),
                    author_user: "u".into(),
                    source_sentence: None,
                },
            );
        }
        let events = vec![
            Event::new(0, Action::Click, "dA"),
            Event::new(1, Action::GenSumm, "dB"),
            Event::new(2, Action::SummGen, "sB"),
            Event::new(3, Action::GenSumm, "dC"),
            Event::new(4, Action::SummGen, "sC"),
        ];
        Uig::new(vec![Trajectory::seed("u", events)], docs, summaries)
    }

    #[test]
    fn interval_measurements_match_hand_arithmetic() {
        let uig = spreadsheet_fixture();
        let store = spreadsheet_store(&uig);
        let cfg = DiversityConfig::default();
        let traj = &uig.trajectories[0];
        assert_eq!(valid_intervals(traj), vec![(0, 2), (2, 4)]);

        // interval (0, 2): opening doc dA=[0,0], inside {dB=[2,0]},
        // surrogate title=[0,1], closing summary sB=[2,2]
        let r = deps_interval(traj, (0, 2), &uig, &store, &cfg).unwrap();
        assert_relative_eq!(r.delta_d, 2.0);
        assert_relative_eq!(r.delta_s, 3.0);
        assert_relative_eq!(r.deps, (2.0 + EPS) / (3.0 + EPS));
        assert_relative_eq!(r.penalty, (1.0 + EPS) / (2.0 + EPS));

        // interval (2, 4): opening s-node sB whose doc is dB, inside {dC}
        let r = deps_interval(traj, (2, 4), &uig, &store, &cfg).unwrap();
        assert_relative_eq!(r.delta_d, 3.0);
        assert_relative_eq!(r.delta_s, 4.0);
        assert_relative_eq!(r.deps, (3.0 + EPS) / (4.0 + EPS));
        assert_relative_eq!(r.penalty, (2.0 + EPS) / (1.0 + EPS));
    }

    #[test]
    fn degreed_matches_term_expansion_on_spreadsheet_fixture() {
        let uig = spreadsheet_fixture();
        let store = spreadsheet_store(&uig);
        let cfg = DiversityConfig::default();
        let report = degreed(&uig, &store, &cfg).unwrap();
        let deps1 = (2.0 + EPS) / (3.0 + EPS) * ((1.0 + EPS) / (2.0 + EPS));
        let deps2 = (3.0 + EPS) / (4.0 + EPS) * ((2.0 + EPS) / (1.0 + EPS));
        let mean_delta_s = (3.0 + 4.0) / 2.0;
        let want = 1.0 / 1.0 * mean_delta_s * ((deps1 + deps2) / 2.0);
        assert_relative_eq!(report.degreed, want, max_relative = 1e-12);
        assert_eq!(report.per_user.len(), 1);
        assert_eq!(report.per_interval.len(), 2);
        assert_eq!(report.tp, Some(1.0));
    }

    #[test]
    fn identical_embeddings_collapse_degreed_to_zero() {
        let uig = spreadsheet_fixture();
        let mut store = EmbeddingStore::new(2, "flat");
        let same = EmbeddingVec { values: vec![0.5, 0.5] };
        let mut keys: Vec<EmbedKey> = vec![
            EmbedKey::text(&uig.docs["dA"].title),
        ];
        for id in ["dA", "dB", "dC"] {
            keys.push(EmbedKey::Doc { id: id.into() });
        }
        for id in ["sB", "sC"] {
            keys.push(EmbedKey::Summary { id: id.into() });
        }
        for k in keys {
            store.insert(k, same.clone()).unwrap();
        }
        let report = degreed(&uig, &store, &DiversityConfig::default()).unwrap();
        assert_eq!(report.degreed, 0.0);
    }

    #[test]
    fn degreed_is_linear_in_alpha() {
        let uig = spreadsheet_fixture();
        let store = spreadsheet_store(&uig);
        let half = degreed(&uig, &store, &DiversityConfig { alpha: 0.5, ..DiversityConfig::default() }).unwrap();
        let quarter = degreed(&uig, &store, &DiversityConfig { alpha: 0.25, ..DiversityConfig::default() }).unwrap();
        assert_relative_eq!(half.degreed, 2.0 * quarter.degreed, max_relative = 1e-12);
    }

    #[test]
    fn interval_free_users_do_not_shift_the_score() {
        let mut uig = spreadsheet_fixture();
        let store = spreadsheet_store(&uig);
        let cfg = DiversityConfig::default();
        let base = degreed(&uig, &store, &cfg).unwrap();
        let extra = Trajectory::seed(
            "idle",
            vec![Event::new(0, Action::Click, "dA"), Event::new(1, Action::Skip, "dB")],
        );
        uig.trajectories.push(extra);
        let with_idle = degreed(&uig, &store, &cfg).unwrap();
        assert_eq!(base.degreed, with_idle.degreed);
        assert!(with_idle.warnings.iter().any(|w| w.contains("idle")));
    }

    #[test]
    fn all_users_interval_free_is_an_error() {
        let (t, docs) = click_traj("u", &["a", "b"]);
        let uig = Uig::new(vec![t], docs, BTreeMap::new());
        let store = EmbeddingStore::synthesize(&uig, 4, 0);
        let err = degreed(&uig, &store, &DiversityConfig::default()).unwrap_err();
        assert!(matches!(err, DiversityError::NoContributingUsers));
    }

    #[test]
    fn three_user_fixture_matches_independent_term_expansion() {
        // synthesized embeddings, oracle expands every term of the score by
        // walking intervals itself
        let mut trajectories = Vec::new();
        let mut docs = BTreeMap::new();
        let mut summaries = BTreeMap::new();
        for (u, n_pairs) in [("u1", 2usize), ("u2", 3), ("u3", 1)] {
            let mut events = vec![Event::new(0, Action::Click, format!("{u}-d0"))];
            docs.insert(format!("{u}-d0"), doc(&format!("{u}-d0"), "x"));
            for p in 0..n_pairs {
                let did = format!("{u}-d{}", p + 1);
                let sid = format!("{u}-s{p}");
                docs.insert(did.clone(), doc(&did, "y"));
                summaries.insert(
                    sid.clone(),
                    SummaryRecord {
                        id: sid.clone(),
                        text: format!("{u} on {did}."),
                        source_doc: did.clone(),
                        author_user: u.to_string(),
                        source_sentence: None,
                    },
                );
                let t = events.len() as u32;
                events.push(Event::new(t, Action::GenSumm, &did));
                events.push(Event::new(t + 1, Action::SummGen, &sid));
            }
            trajectories.push(Trajectory::seed(u, events));
        }
        let uig = Uig::new(trajectories, docs, summaries);
        let store = EmbeddingStore::synthesize(&uig, 6, 9);
        let cfg = DiversityConfig { alpha: 0.7, ..DiversityConfig::default() };
        let report = degreed(&uig, &store, &cfg).unwrap();

        let mut sum_terms = 0.0;
        for traj in &uig.trajectories {
            let ivs = valid_intervals(traj);
            let mut ds_sum = 0.0;
            let mut dp_sum = 0.0;
            for (a, b) in ivs.iter().copied() {
                let (da, sa) = boundary_vecs(traj, a, &uig, &store).unwrap();
                let (db, sb) = boundary_vecs(traj, b, &uig, &store).unwrap();
                let mut dd = 0.0;
                let mut n = 0.0;
                for e in &traj.events[a + 1..b] {
                    let dv = doc_vec(&store, &uig.docs[&e.id]).unwrap();
                    dd += distance(&cfg.metric, da, dv).unwrap();
                    n += 1.0;
                }
                let dd = if n == 0.0 { 0.0 } else { dd / n };
                let ds = distance(&cfg.metric, sa, sb).unwrap();
                let dep = (dd.min(ds) + cfg.epsilon) / (dd.max(ds) + cfg.epsilon);
                let pen = (distance(&cfg.metric, da, sa).unwrap() + cfg.epsilon)
                    / (distance(&cfg.metric, db, sb).unwrap() + cfg.epsilon);
                ds_sum += ds;
                dp_sum += dep * pen;
            }
            let k = ivs.len() as f64;
            sum_terms += (ds_sum / k) * (dp_sum / k);
        }
        let want = cfg.alpha / 3.0 * sum_terms;
        assert_relative_eq!(report.degreed, want, max_relative = 1e-12);
    }

    #[test]
    fn rescaled_distances_rescale_degreed_linearly() {
        // compare Manhattan against itself with all embeddings scaled by c;
        // epsilon must scale along for the ratios to cancel
        let uig = spreadsheet_fixture();
        let store = spreadsheet_store(&uig);
        let base = degreed(&uig, &store, &DiversityConfig::default()).unwrap();
        for c in [0.1f64, 2.0, 17.0] {
            let mut scaled = EmbeddingStore::new(2, "scaled");
            for key in store.keys() {
                let v = store.get(key).unwrap();
                let vals: Vec<f32> = v.values.iter().map(|x| (*x as f64 * c) as f32).collect();
                scaled.insert(key.clone(), EmbeddingVec { values: vals }).unwrap();
            }
            let cfg = DiversityConfig { epsilon: 1e-8 * c, ..DiversityConfig::default() };
            let got = degreed(&uig, &scaled, &cfg).unwrap();
            assert_relative_eq!(got.degreed, c * base.degreed, max_relative = 1e-9);
        }
    }

    #[test]
    fn synthesized_store_covers_degreed_needs() {
        let uig = two_snode_fixture();
        let store = EmbeddingStore::synthesize(&uig, 8, 3);
        let report = degreed(&uig, &store, &DiversityConfig::default()).unwrap();
        assert!(report.degreed > 0.0);
        assert_eq!(report.per_interval.len(), 2);
        let _ = test_embedder("anchor", 8, 3);
    }
}
