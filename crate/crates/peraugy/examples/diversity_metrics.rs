//! Score a pool's diversity three ways: distinct topics per trajectory,
//! topic-change rate, and the embedding-based interval measure.

use peraugy::diversity::{degreed, tp_dataset, rtc_dataset, DiversityConfig};
use peraugy::embed::EmbeddingStore;
use peraugy::ingest::{synth_pool, SynthConfig};

fn main() -> anyhow::Result<()> {
    let pool = synth_pool(&SynthConfig { users: 40, len: 30, docs: 90, topics: 6, seed: 1 });
    let store = EmbeddingStore::synthesize(&pool, 24, 1);

    // the two topic-label metrics need no embeddings
    let tp = tp_dataset(&pool)?;
    let (rtc, skipped) = rtc_dataset(&pool)?;
    println!("TP  = {tp:.3} distinct topics per trajectory");
    println!("RTC = {rtc:.3} topic changes per transition ({} trajectories skipped)", skipped.len());

    // the interval measure reads d-node context before and after each
    // generated summary
    let report = degreed(&pool, &store, &DiversityConfig::default())?;
    println!("DegreeD = {:.6} over {} users", report.degreed, report.per_user.len());

    let mut users = report.per_user.clone();
    users.sort_by(|a, b| b.contribution.total_cmp(&a.contribution));
    println!("top contributors:");
    for u in users.iter().take(3) {
        println!(
            "  {}: {} intervals, mean gap-to-summary distance {:.3}, contribution {:.4}",
            u.user, u.interval_count, u.mean_delta_s, u.contribution
        );
    }
    for w in &report.warnings {
        println!("note: {w}");
    }
    Ok(())
}
