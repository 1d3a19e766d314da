//! Perturb exchanged summary nodes: shuffle first so some s-nodes are
//! eligible, then let the Markovian step replace them with the closest
//! verbatim sentence under a decayed context embedding.

use peraugy::augment::{double_shuffle, smp_perturb, DsConfig, SmpConfig};
use peraugy::embed::EmbeddingStore;
use peraugy::ingest::{synth_pool, SynthConfig};
use peraugy::uig::NodeKind;

fn main() -> anyhow::Result<()> {
    let pool = synth_pool(&SynthConfig { users: 6, len: 30, docs: 40, ..SynthConfig::default() });
    let store = EmbeddingStore::synthesize(&pool, 16, 7);
    println!("embedding store: {} vectors, dim {}", store.len(), store.dim());

    // shuffling marks the s-nodes it moved; those are what SMP may touch
    let ds = DsConfig { m: 3, gap: 2, target_len: 24, seed: 3, ..DsConfig::default() };
    let shuffled = double_shuffle(&pool.trajectories[..3], &ds)?;

    let smp = SmpConfig { k: 6, lambda: 0.5, p_smp: 1.0, seed: 3, ..SmpConfig::default() };
    for traj in &shuffled {
        let outcome = smp_perturb(traj, &pool, &store, &smp)?;
        let snodes = traj.events.iter().filter(|e| e.kind == NodeKind::Summary).count();
        println!(
            "{}: {} of {} s-nodes perturbed, {} replacement summaries",
            traj.user,
            outcome.perturbed,
            snodes,
            outcome.new_summaries.len()
        );
        for s in outcome.new_summaries.iter().take(2) {
            println!("  {} <- doc {}: {:?}", s.id, s.source_doc, s.text);
        }
    }

    // p = 0 must be a no-op regardless of eligibility
    let frozen = SmpConfig { p_smp: 0.0, ..smp };
    let outcome = smp_perturb(&shuffled[0], &pool, &store, &frozen)?;
    assert_eq!(outcome.perturbed, 0);
    assert_eq!(outcome.trajectory, shuffled[0]);
    println!("p_smp = 0 leaves the trajectory untouched");
    Ok(())
}
