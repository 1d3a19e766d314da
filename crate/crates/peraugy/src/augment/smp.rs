//! Stochastic Markovian perturbation: rewrite a spliced summary node's text
//! with the sentence of the preceding document that sits closest, in
//! decay-weighted distance, to the trajectory's recent context.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{distance, doc_vec, sentence_vec, summary_vec, DistanceMetric, EmbeddingStore, EmbeddingVec};
use crate::rng::{derive_rng, derive_seed};
use crate::uig::{Action, NodeKind, Provenance, SentenceRef, SummaryRecord, Trajectory, Uig};

use super::AugmentError;

/// Which s-nodes are candidates for perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmpScope {
    /// Only s-nodes the shuffle pulled in from another trajectory (their
    /// history changed, so their text may no longer fit).
    Exchanged,
    /// Every s-node; used for ablation.
    All,
}

fn default_top_p() -> usize {
    1
}

fn default_metric() -> DistanceMetric {
    DistanceMetric::Rmsd
}

fn default_scope() -> SmpScope {
    SmpScope::Exchanged
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmpConfig {
    /// Context window length in time-steps.
    pub k: usize,
    /// Exponential decay constant for context positions.
    pub lambda: f64,
    /// Perturbation probability per eligible s-node.
    pub p_smp: f64,
    #[serde(default = "default_top_p")]
    pub top_p: usize,
    #[serde(default = "default_metric")]
    pub metric: DistanceMetric,
    #[serde(default = "default_scope")]
    pub scope: SmpScope,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SmpConfig {
    fn default() -> Self {
        SmpConfig {
            k: 10,
            lambda: 0.3,
            p_smp: 0.8,
            top_p: 1,
            metric: DistanceMetric::Rmsd,
            scope: SmpScope::Exchanged,
            seed: 0,
        }
    }
}

impl SmpConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let mut problems = Vec::new();
        if self.k < 1 {
            problems.push("k = 0 (need >= 1)".to_string());
        }
        if !(0.0..=1.0).contains(&self.p_smp) {
            problems.push(format!("p_smp = {} outside [0, 1]", self.p_smp));
        }
        if self.lambda < 0.0 {
            problems.push(format!("lambda = {} (need >= 0)", self.lambda));
        }
        if self.top_p < 1 {
            problems.push("top_p = 0 (need >= 1)".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AugmentError::BadConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmpOutcome {
    pub trajectory: Trajectory,
    /// Records for the rewritten s-nodes; each points at the verbatim
    /// sentence it was taken from.
    pub new_summaries: Vec<SummaryRecord>,
    pub warnings: Vec<String>,
    pub perturbed: usize,
}

/// Context weights e^(-lambda * pos); pos 0 weighs exactly 1 and weights are
/// non-increasing.
fn decay_weights(k: usize, lambda: f64) -> Vec<f64> {
    (0..k).map(|pos| (-lambda * pos as f64).exp()).collect()
}

fn context_embedding<'a>(
    uig: &'a Uig,
    store: &'a EmbeddingStore,
    kind: NodeKind,
    id: &str,
) -> Result<&'a EmbeddingVec, AugmentError> {
    match kind {
        NodeKind::Doc => {
            let doc = uig.docs.get(id).ok_or_else(|| AugmentError::MissingDoc(id.to_string()))?;
            Ok(doc_vec(store, doc)?)
        }
        NodeKind::Summary => {
            let rec = uig.summaries.get(id).ok_or_else(|| AugmentError::MissingSummary(id.to_string()))?;
            Ok(summary_vec(store, rec)?)
        }
        NodeKind::User => Err(AugmentError::BadConfig(format!("u-node {id} in a trajectory"))),
    }
}

/// Perturbs eligible s-nodes of one trajectory. For each selected node the
/// context window is the k nodes before it (most recent first, truncated at
/// the start); each sentence of the preceding document is scored by the
/// decay-weighted sum of its distances to the context, and the lowest-scoring
/// sentence replaces the node's text as a fresh summary record.
///
/// Contexts read the input trajectory, so perturbations within one pass are
/// independent of each other and of iteration order.
pub fn smp_perturb(
    traj: &Trajectory,
    uig: &Uig,
    store: &EmbeddingStore,
    cfg: &SmpConfig,
) -> Result<SmpOutcome, AugmentError> {
    cfg.validate()?;
    let mut rng = derive_rng(cfg.seed, &["smp", &traj.user]);
    let weights = decay_weights(cfg.k, cfg.lambda);

    let mut out = traj.clone();
    let mut new_summaries = Vec::new();
    let mut warnings = Vec::new();
    let mut perturbed = 0usize;

    for (t, ev) in traj.events.iter().enumerate() {
        if ev.action != Action::SummGen {
            continue;
        }
        let eligible = match cfg.scope {
            SmpScope::All => true,
            SmpScope::Exchanged => ev.origin.as_ref().map_or(false, |o| o.exchanged),
        };
        if !eligible || !rng.gen_bool(cfg.p_smp) {
            continue;
        }
        if t == 0 {
            warnings.push(format!("user {}: s-node at step 0 has no history, skipped", traj.user));
            continue;
        }
        let prev = &traj.events[t - 1];
        if prev.kind != NodeKind::Doc {
            warnings.push(format!(
                "user {}: s-node at step {t} not preceded by a d-node, skipped",
                traj.user
            ));
            continue;
        }
        let doc = uig
            .docs
            .get(&prev.id)
            .ok_or_else(|| AugmentError::MissingDoc(prev.id.clone()))?;
        if doc.body.is_empty() {
            warnings.push(format!(
                "user {}: doc {} has no sentences, s-node at step {t} skipped",
                traj.user, doc.id
            ));
            continue;
        }

        let mut ctx: Vec<(&EmbeddingVec, f64)> = Vec::with_capacity(cfg.k);
        for q in 1..=cfg.k {
            let Some(i) = t.checked_sub(q) else { break };
            let c = &traj.events[i];
            ctx.push((context_embedding(uig, store, c.kind, &c.id)?, weights[q - 1]));
        }

        let mut scores: Vec<(f64, usize)> = Vec::with_capacity(doc.body.len());
        for p in 0..doc.body.len() {
            let sv = sentence_vec(store, doc, p as u32)?;
            let mut score = 0.0;
            for (cv, w) in &ctx {
                score += w * distance(&cfg.metric, sv, cv)?;
            }
            scores.push((score, p));
        }
        scores.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        let chosen = scores[..cfg.top_p.min(scores.len())][0].1;

        let salt = derive_seed(cfg.seed, &["smpid", &traj.user, &t.to_string()]);
        let new_id = format!("{}~smp{t}:{:08x}", ev.id, salt as u32);
        new_summaries.push(SummaryRecord {
            id: new_id.clone(),
            text: doc.body[chosen].clone(),
            source_doc: doc.id.clone(),
            author_user: traj.user.clone(),
            source_sentence: Some(SentenceRef { doc: doc.id.clone(), index: chosen as u32 }),
        });
        out.events[t].id = new_id;
        perturbed += 1;
    }

    if perturbed > 0 {
        out.provenance = Provenance::Dssmp;
    }
    Ok(SmpOutcome { trajectory: out, new_summaries, warnings, perturbed })
}
