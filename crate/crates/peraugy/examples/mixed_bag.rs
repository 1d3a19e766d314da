//! Grow a pool with the published 10-configuration mixed bag: every config
//! shuffles (and mostly perturbs) the whole pool, then a seeded sample of
//! each config's output lands in the final bag.

use std::collections::BTreeMap;

use peraugy::augment::{build_mix, mix10_scaled};
use peraugy::embed::EmbeddingStore;
use peraugy::ingest::{synth_pool, SynthConfig};
use peraugy::uig::validate;

fn main() -> anyhow::Result<()> {
    let pool = synth_pool(&SynthConfig { users: 60, len: 30, docs: 120, ..SynthConfig::default() });
    let store = EmbeddingStore::synthesize(&pool, 16, 0);

    // scale 0.2 shrinks target lengths/gaps for a quick demo; 1.0 is the
    // published recipe
    let mix = mix10_scaled(42, 0.2);
    println!("bag of {} configs, keeping {:.0}% of each output", mix.configs.len(), mix.sample_fraction * 100.0);
    for entry in &mix.configs {
        let smp = entry
            .smp
            .as_ref()
            .map(|s| format!("smp k={} lambda={} p={}", s.k, s.lambda, s.p_smp))
            .unwrap_or_else(|| "no smp".into());
        println!("  {:8} ds len={} gap={} | {}", entry.tag, entry.ds.target_len, entry.ds.gap, smp);
    }

    let bag = build_mix(&pool, &mix, Some(&store))?;
    assert!(validate(&bag).is_clean());

    let mut per_tag: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &bag.trajectories {
        *per_tag.entry(t.config.as_str()).or_insert(0) += 1;
    }
    println!("bag holds {} trajectories:", bag.trajectories.len());
    for (tag, n) in per_tag {
        println!("  {tag:8} {n}");
    }

    // renamed users encode their source config, so bags never collide with
    // the originals
    let sample = &bag.trajectories[0];
    println!("first bag trajectory: {} ({:?})", sample.user, sample.provenance);
    Ok(())
}
