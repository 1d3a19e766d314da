//! Builds the user-encoder evaluation harness from a pool with injected
//! s-nodes: per user, half the summary pairs stay in the history, the rest
//! become positive candidates, and negatives are drawn seeded from docs the
//! user never clicked.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rng::derive_rng;
use crate::uig::{Action, NodeKind, Trajectory, Uig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestsetConfig {
    /// Negatives drawn per positive candidate.
    pub negatives_per_positive: usize,
    /// Start of the eligible index window into the user's never-clicked doc
    /// list; indices below it are considered too popular.
    pub window_start: usize,
    pub seed: u64,
}

impl Default for TestsetConfig {
    fn default() -> Self {
        TestsetConfig { negatives_per_positive: 1, window_start: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateLabel {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTestCase {
    pub user: String,
    /// History trajectory: the user's events with all traces of the positive
    /// candidates removed, so candidates never leak into the input.
    pub history: Trajectory,
    pub candidates: Vec<(String, CandidateLabel)>,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncoderTestSet {
    pub cases: Vec<UserTestCase>,
    pub warnings: Vec<String>,
}

/// Per user: first half of the GenSumm/SummGen pairs stays in the history,
/// the second half's docs become positives; negatives are sampled without
/// replacement from the index window `[window_start, n_s)` of the sorted
/// never-clicked doc list. Users with fewer than two pairs are excluded.
pub fn build_encoder_testset(uig: &Uig, cfg: &TestsetConfig) -> EncoderTestSet {
    let mut out = EncoderTestSet::default();
    for traj in &uig.trajectories {
        let pair_docs: Vec<&str> = traj
            .events
            .iter()
            .filter(|e| e.action == Action::GenSumm)
            .map(|e| e.id.as_str())
            .collect();
        if pair_docs.len() < 2 {
            out.warnings.push(format!(
                "user {}: {} summary pair(s), need at least 2, excluded",
                traj.user,
                pair_docs.len()
            ));
            continue;
        }
        let split = pair_docs.len() / 2;
        let positives: Vec<String> = pair_docs[split..].iter().map(|d| d.to_string()).collect();
        let positive_set: BTreeSet<&str> = positives.iter().map(|s| s.as_str()).collect();

        let mut history_events: Vec<_> = traj
            .events
            .iter()
            .filter(|e| {
                let doc_of_event = match e.kind {
                    NodeKind::Doc => Some(e.id.as_str()),
                    NodeKind::Summary => uig.summaries.get(&e.id).map(|s| s.source_doc.as_str()),
                    NodeKind::User => None,
                };
                doc_of_event.map_or(true, |d| !positive_set.contains(d))
            })
            .cloned()
            .collect();
        for (i, ev) in history_events.iter_mut().enumerate() {
            ev.t = i as u32;
        }
        let history = Trajectory {
            user: traj.user.clone(),
            provenance: traj.provenance,
            config: traj.config.clone(),
            events: history_events,
        };

        let clicked: BTreeSet<&str> = traj
            .events
            .iter()
            .filter(|e| matches!(e.action, Action::Click | Action::GenSumm))
            .map(|e| e.id.as_str())
            .collect();
        let never_clicked: Vec<&str> = uig
            .docs
            .keys()
            .map(|k| k.as_str())
            .filter(|id| !clicked.contains(id))
            .collect();
        let window = if never_clicked.len() > cfg.window_start {
            &never_clicked[cfg.window_start..]
        } else {
            &[] as &[&str]
        };
        let wanted = cfg.negatives_per_positive * positives.len();
        let mut rng = derive_rng(cfg.seed, &["testset", &traj.user]);
        let take = wanted.min(window.len());
        if take < wanted {
            out.warnings.push(format!(
                "user {}: only {take} of {wanted} negatives available in window",
                traj.user
            ));
        }
        let negatives: Vec<String> = rand::seq::index::sample(&mut rng, window.len(), take)
            .iter()
            .map(|i| window[i].to_string())
            .collect();

        let mut candidates: Vec<(String, CandidateLabel)> =
            positives.iter().map(|d| (d.clone(), CandidateLabel::Positive)).collect();
        candidates.extend(negatives.into_iter().map(|d| (d, CandidateLabel::Negative)));

        out.cases.push(UserTestCase { user: traj.user.clone(), history, candidates, targets: positives });
    }
    out
}
