//! Run one double-shuffling round by hand and inspect what it did: which
//! prefix survived, where each spliced segment came from, and how the output
//! differs from its target.

use peraugy::augment::{double_shuffle_with_report, DsConfig};
use peraugy::ingest::{synth_pool, SynthConfig};
use peraugy::uig::validate;

fn main() -> anyhow::Result<()> {
    let pool = synth_pool(&SynthConfig { users: 3, len: 30, docs: 60, ..SynthConfig::default() });

    // one round consumes exactly m trajectories: sample[0] is the target,
    // the rest donate segments
    let cfg = DsConfig { m: 3, gap: 2, target_len: 24, seg_len_range: (2, 3), seed: 11, ..DsConfig::default() };
    let shuffled = double_shuffle_with_report(&pool.trajectories, &cfg)?;

    for (out, report) in &shuffled {
        println!("target {} -> {} events", out.user, out.events.len());
        println!("  preserved prefix: {} events", report.offset);
        println!("  source segments: starts {:?}, lengths {:?}", report.seg_starts, report.seg_lens);
        // every event records where it came from; exchanged marks donations
        let exchanged = |e: &&peraugy::uig::Event| {
            e.origin.as_ref().map(|o| o.exchanged).unwrap_or(false)
        };
        let donated = out.events.iter().filter(exchanged).count();
        println!("  {} of {} events were donated by a source", donated, out.events.len());
        for ev in out.events.iter().filter(exchanged).take(4) {
            let origin = ev.origin.as_ref().unwrap();
            println!("    t={} {} came from {} t={}", ev.t, ev.id, origin.source_user, origin.source_step);
        }
    }

    // the shuffled pool is still structurally sound
    let mut grown = pool.clone();
    grown.trajectories.extend(shuffled.into_iter().map(|(t, _)| t));
    assert!(validate(&grown).is_clean());
    println!("grown pool validates clean ({} trajectories)", grown.trajectories.len());
    Ok(())
}
