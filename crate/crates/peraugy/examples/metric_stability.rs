//! How robust is a diversity ranking to the choice of distance function?
//! Score several datasets under the reference metric and under a bounded
//! distortion of it, then check the squeeze bounds and the ranking.

use peraugy::diversity::{degreed, DiversityConfig};
use peraugy::embed::EmbeddingStore;
use peraugy::ingest::{synth_pool, SynthConfig};
use peraugy::stats::{
    ambiguity_band, inject_adjacent_swaps, kappa0, rank_stability, squeeze_check,
    squeeze_constants, weighted_window_distortion, StabilityInput,
};

fn main() -> anyhow::Result<()> {
    const DIM: usize = 16;

    // any per-coordinate reweighting with weights in [lo, hi] distorts
    // Manhattan distances by at most lo..hi
    let (lo, hi) = (1.0, 2.0);
    let warped = weighted_window_distortion(DIM, lo, hi, 99)?;

    let mut labels = Vec::new();
    let mut f = Vec::new();
    let mut g = Vec::new();
    for seed in 0..5u64 {
        let pool = synth_pool(&SynthConfig {
            users: 24,
            len: 24,
            docs: 50,
            topics: 4 + seed as usize,
            seed,
        });
        let store = EmbeddingStore::synthesize(&pool, DIM, seed);
        let base = degreed(&pool, &store, &DiversityConfig::default())?;
        let distorted_cfg = DiversityConfig { metric: warped.clone(), ..DiversityConfig::default() };
        let distorted = degreed(&pool, &store, &distorted_cfg)?;
        labels.push(format!("pool-{seed}"));
        f.push(base.degreed);
        g.push(distorted.degreed);
    }

    let (k_lo, k_hi) = squeeze_constants(lo, hi);
    println!("window [{lo}, {hi}] squeezes scores into [{k_lo} f, {k_hi} f]:");
    let input = StabilityInput { labels, f, g, a: None, lambda_lo: lo, lambda_hi: hi };
    let squeeze = squeeze_check(&input)?;
    for v in &squeeze.verdicts {
        println!(
            "  {}: f={:.5} g={:.5} in [{:.5}, {:.5}] {}",
            v.label,
            v.f,
            v.g,
            v.lower,
            v.upper,
            if v.pass { "ok" } else { "VIOLATED" }
        );
    }
    assert!(squeeze.all_pass);

    // pairs whose score ratio falls inside the ambiguity band may reorder;
    // everything outside it cannot
    let band = ambiguity_band(lo, hi)?;
    println!("ambiguity band: ratios in ({:.5}, {:.1})", band.0, band.1);
    println!("separation needed to pin every pair: kappa0 = {:.4}", kappa0(lo, hi)?);

    let rank = rank_stability(&input)?;
    println!(
        "{} in-band pairs, {} inversions, rho_s = {:.4}, tau = {:.4}, guaranteed identical: {}",
        rank.in_band_pairs.len(),
        rank.inversions.len(),
        rank.spearman_rho,
        rank.kendall_tau,
        rank.guaranteed_identical
    );

    // what K disjoint adjacent swaps would do to the rank correlation
    let scores: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    for k in [1, 2, 4] {
        let mut swapped = scores.clone();
        let applied = inject_adjacent_swaps(&mut swapped, k, 5);
        let perturbed = StabilityInput {
            labels: (1..=10).map(|i| format!("d{i}")).collect(),
            f: scores.clone(),
            g: swapped,
            a: None,
            lambda_lo: 1.0,
            lambda_hi: 1.0,
        };
        let r = rank_stability(&perturbed)?;
        println!("{applied} adjacent swaps on 10 items: rho_s = {:.4}", r.spearman_rho);
    }
    Ok(())
}
