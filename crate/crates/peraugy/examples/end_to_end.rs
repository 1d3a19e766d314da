//! The whole pipeline in one process: generate a pool, grow it with the
//! mixed bag, score each config's slice for diversity, and correlate those
//! scores against a downstream accuracy proxy.

use std::collections::BTreeMap;

use peraugy::augment::{build_mix, mix10_scaled};
use peraugy::diversity::{degreed, DiversityConfig};
use peraugy::embed::EmbeddingStore;
use peraugy::ingest::{synth_pool, SynthConfig};
use peraugy::rank_eval::{auc_dataset, ScoredCandidate, ScoredCandidates};
use peraugy::rng::derive_rng;
use peraugy::stats::diversity_accuracy_correlation;
use peraugy::uig::{validate, Uig};
use rand::Rng;

fn main() -> anyhow::Result<()> {
    let seed = 2024;
    let pool = synth_pool(&SynthConfig { users: 80, len: 30, docs: 150, topics: 7, seed });
    println!("seed pool: {} trajectories", pool.trajectories.len());

    // embeddings are synthesized deterministically from (text, dim, seed),
    // so every stage regenerates identical vectors
    let store = EmbeddingStore::synthesize(&pool, 24, seed);
    let bag = build_mix(&pool, &mix10_scaled(seed, 0.25), Some(&store))?;
    assert!(validate(&bag).is_clean());
    println!("mixed bag: {} trajectories", bag.trajectories.len());

    // slice the bag by config tag and score each slice separately
    let mut by_tag: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for t in &bag.trajectories {
        by_tag.entry(t.config.clone()).or_default().push(t.clone());
    }
    let mut diversity = BTreeMap::new();
    for (tag, trajectories) in by_tag {
        let slice = Uig::new(trajectories, bag.docs.clone(), bag.summaries.clone());
        let slice_store = EmbeddingStore::synthesize(&slice, 24, seed);
        let report = degreed(&slice, &slice_store, &DiversityConfig::default())?;
        println!("  {tag:8} DegreeD = {:.5} ({} users)", report.degreed, report.per_user.len());
        diversity.insert(tag, report.degreed);
    }

    // stand-in for a recommender trained per slice: ranking quality noisily
    // increasing in slice diversity
    let max_d = diversity.values().cloned().fold(f64::MIN, f64::max);
    let min_d = diversity.values().cloned().fold(f64::MAX, f64::min);
    let mut accuracy = BTreeMap::new();
    for (tag, d) in &diversity {
        let mut rng = derive_rng(seed, &["proxy-eval", tag]);
        let tables: Vec<ScoredCandidates> = (0..40)
            .map(|i| {
                // diversity helps the positive; spread the slices apart so
                // the effect survives the noise
                let lift = 0.1 + 1.2 * (d - min_d) / (max_d - min_d);
                let pos = ScoredCandidate {
                    doc: format!("pos-{i}"),
                    score: rng.gen::<f64>() + lift,
                    label: peraugy::ingest::CandidateLabel::Positive,
                };
                let neg = ScoredCandidate {
                    doc: format!("neg-{i}"),
                    score: rng.gen::<f64>(),
                    label: peraugy::ingest::CandidateLabel::Negative,
                };
                ScoredCandidates { user: format!("u{i}"), candidates: vec![pos, neg] }
            })
            .collect();
        accuracy.insert(tag.clone(), auc_dataset(&tables)?);
    }

    let table = diversity_accuracy_correlation(&diversity, &accuracy)?;
    println!(
        "diversity vs AUC over {} configs: pearson {:?}, spearman {:.3}, kendall {:.3}",
        table.labels.len(),
        table.full.pearson,
        table.full.spearman,
        table.full.kendall
    );
    for (label, row) in table.leave_one_out.iter().take(3) {
        println!("  without {label:8} spearman {:.3}", row.spearman);
    }
    Ok(())
}
