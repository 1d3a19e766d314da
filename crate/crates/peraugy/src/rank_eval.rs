//! Next-item prediction accuracy over scored candidate lists: pairwise
//! ranking probability, reciprocal rank of the first hit, and discounted
//! cumulative gain with the score-as-gain convention.

use serde::{Deserialize, Serialize};

use crate::ingest::CandidateLabel;

#[derive(Debug, thiserror::Error)]
pub enum RankEvalError {
    #[error("user {user} has no {side} candidates")]
    EmptySide { user: String, side: &'static str },
    #[error("no user qualifies for the aggregate")]
    NoQualifyingUsers,
    #[error("user {user}: non-finite score on doc {doc}")]
    NonFiniteScore { user: String, doc: String },
    #[error("cutoff k must be at least 1")]
    BadK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub doc: String,
    pub score: f64,
    pub label: CandidateLabel,
}

/// One user's candidate list in its original (stable) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidates {
    pub user: String,
    pub candidates: Vec<ScoredCandidate>,
}

impl ScoredCandidates {
    fn check_finite(&self) -> Result<(), RankEvalError> {
        for c in &self.candidates {
            if !c.score.is_finite() {
                return Err(RankEvalError::NonFiniteScore {
                    user: self.user.clone(),
                    doc: c.doc.clone(),
                });
            }
        }
        Ok(())
    }

    fn split_scores(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for c in &self.candidates {
            match c.label {
                CandidateLabel::Positive => pos.push(c.score),
                CandidateLabel::Negative => neg.push(c.score),
            }
        }
        (pos, neg)
    }

    /// Candidates in descending score order; ties keep input order.
    fn ranked(&self) -> Vec<&ScoredCandidate> {
        let mut v: Vec<&ScoredCandidate> = self.candidates.iter().collect();
        v.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));
        v
    }
}

/// Probability that a random positive outscores a random negative; ties
/// count as losses (strict inequality).
pub fn auc(sc: &ScoredCandidates) -> Result<f64, RankEvalError> {
    sc.check_finite()?;
    let (pos, neg) = sc.split_scores();
    if pos.is_empty() {
        return Err(RankEvalError::EmptySide { user: sc.user.clone(), side: "positive" });
    }
    if neg.is_empty() {
        return Err(RankEvalError::EmptySide { user: sc.user.clone(), side: "negative" });
    }
    let wins = pos
        .iter()
        .map(|p| neg.iter().filter(|n| p > n).count())
        .sum::<usize>();
    Ok(wins as f64 / (pos.len() * neg.len()) as f64)
}

pub fn auc_dataset(scs: &[ScoredCandidates]) -> Result<f64, RankEvalError> {
    if scs.is_empty() {
        return Err(RankEvalError::NoQualifyingUsers);
    }
    let mut sum = 0.0;
    for sc in scs {
        sum += auc(sc)?;
    }
    Ok(sum / scs.len() as f64)
}

/// Mean over users of 1/rank of the best-ranked positive. Users without a
/// positive cannot be ranked and are skipped, named in the warnings.
pub fn mrr(scs: &[ScoredCandidates]) -> Result<(f64, Vec<String>), RankEvalError> {
    let mut warnings = Vec::new();
    let mut sum = 0.0;
    let mut n = 0usize;
    for sc in scs {
        sc.check_finite()?;
        let rank = sc
            .ranked()
            .iter()
            .position(|c| c.label == CandidateLabel::Positive);
        match rank {
            Some(i) => {
                sum += 1.0 / (i + 1) as f64;
                n += 1;
            }
            None => warnings.push(format!("user {}: no positive candidate, excluded", sc.user)),
        }
    }
    if n == 0 {
        return Err(RankEvalError::NoQualifyingUsers);
    }
    Ok((sum / n as f64, warnings))
}

/// Gain of a candidate: its prediction score (clamped at zero) when it is a
/// positive, or 1/0 under binary relevance.
fn gain(c: &ScoredCandidate, binary: bool) -> f64 {
    match c.label {
        CandidateLabel::Positive => {
            if binary {
                1.0
            } else {
                c.score.max(0.0)
            }
        }
        CandidateLabel::Negative => 0.0,
    }
}

/// Discounted cumulative gain at `k` over the predicted (score-sorted)
/// ranking, normalized by the ideal ranking that packs the best-scored
/// positives first. Users whose ideal gain is zero contribute zero.
pub fn ndcg_at_k(scs: &[ScoredCandidates], k: usize, binary: bool) -> Result<f64, RankEvalError> {
    if k < 1 {
        return Err(RankEvalError::BadK);
    }
    if scs.is_empty() {
        return Err(RankEvalError::NoQualifyingUsers);
    }
    let discounted = |gains: &[f64]| {
        gains
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, g)| g / ((i + 2) as f64).log2())
            .sum::<f64>()
    };
    let mut sum = 0.0;
    for sc in scs {
        sc.check_finite()?;
        let predicted: Vec<f64> = sc.ranked().iter().map(|c| gain(c, binary)).collect();
        let mut ideal: Vec<f64> = sc
            .candidates
            .iter()
            .filter(|c| c.label == CandidateLabel::Positive)
            .map(|c| gain(c, binary))
            .collect();
        ideal.sort_by(|a, b| b.partial_cmp(a).expect("finite gains"));
        let idcg = discounted(&ideal);
        if idcg > 0.0 {
            sum += discounted(&predicted) / idcg;
        }
    }
    Ok(sum / scs.len() as f64)
}
