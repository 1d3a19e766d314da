//! Rank candidate lists per user and aggregate AUC, MRR, and nDCG@k.

use peraugy::ingest::CandidateLabel;
use peraugy::rank_eval::{auc, auc_dataset, mrr, ndcg_at_k, ScoredCandidate, ScoredCandidates};

fn table(user: &str, rows: &[(&str, f64, bool)]) -> ScoredCandidates {
    ScoredCandidates {
        user: user.into(),
        candidates: rows
            .iter()
            .map(|(doc, score, pos)| ScoredCandidate {
                doc: doc.to_string(),
                score: *score,
                label: if *pos { CandidateLabel::Positive } else { CandidateLabel::Negative },
            })
            .collect(),
    }
}

fn main() -> anyhow::Result<()> {
    let tables = vec![
        // clean separation: every positive outscores every negative
        table("ana", &[("d1", 0.9, true), ("d2", 0.8, true), ("d3", 0.3, false), ("d4", 0.1, false)]),
        // one inversion: the negative d6 outscores the positive d7
        table("bo", &[("d5", 0.7, true), ("d6", 0.6, false), ("d7", 0.5, true), ("d8", 0.2, false)]),
        // the model buries the only positive
        table("cy", &[("d9", 0.8, false), ("d10", 0.6, false), ("d11", 0.1, true)]),
    ];

    for t in &tables {
        println!("{}: AUC = {:.4}", t.user, auc(t)?);
    }
    println!("dataset AUC = {:.4}", auc_dataset(&tables)?);

    let (mrr_value, excluded) = mrr(&tables)?;
    println!("MRR = {mrr_value:.4} (excluded: {excluded:?})");

    for k in [1, 3, 10] {
        println!("nDCG@{k} = {:.4}", ndcg_at_k(&tables, k, true)?);
    }

    // ranking metrics see order, not magnitude: squashing all scores through
    // a monotone map changes nothing
    let squashed: Vec<ScoredCandidates> = tables
        .iter()
        .map(|t| ScoredCandidates {
            user: t.user.clone(),
            candidates: t
                .candidates
                .iter()
                .map(|c| ScoredCandidate { score: (c.score * 3.0).tanh(), ..c.clone() })
                .collect(),
        })
        .collect();
    assert_eq!(auc_dataset(&tables)?, auc_dataset(&squashed)?);
    println!("AUC invariant under monotone rescaling");
    Ok(())
}
