//! Drives the full augmentation loop (sample, shuffle, perturb, return to
//! pool) and assembles the mixed-bag dataset from many configurations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingStore;
use crate::rng::derive_seed;
use crate::uig::{Trajectory, Uig};

use super::ds::{double_shuffle, sample_without_replacement, DsConfig};
use super::smp::{smp_perturb, SmpConfig};
use super::AugmentError;

/// Scaled presets never shrink a trajectory below this many events.
pub const PRESET_SCALE_FLOOR_LEN: usize = 6;
/// Scaled presets never shrink the gap below this many events.
pub const PRESET_SCALE_FLOOR_GAP: usize = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub iterations: usize,
    /// Trajectories rebuilt by shuffling (m per iteration).
    pub transformed: usize,
    /// S-nodes rewritten across all iterations.
    pub perturbed_nodes: usize,
    pub warnings: Vec<String>,
}

/// Runs floor(|pool| / m) sampling iterations. Each iteration draws m
/// trajectories without replacement, shuffles them against each other,
/// optionally perturbs the spliced s-nodes, and returns the results to the
/// pool, so later draws can pick up already-augmented trajectories.
///
/// Iterations are sequential (the pool mutates between draws); the
/// perturbations inside one iteration run in parallel and read the
/// iteration-start summary table, which is sound because a context window can
/// only reference summary ids that existed before the iteration began.
pub fn run_pipeline(
    uig: &Uig,
    ds: &DsConfig,
    smp: Option<(&SmpConfig, &EmbeddingStore)>,
) -> Result<Uig, AugmentError> {
    run_pipeline_with_report(uig, ds, smp).map(|(out, _)| out)
}

pub fn run_pipeline_with_report(
    uig: &Uig,
    ds: &DsConfig,
    smp: Option<(&SmpConfig, &EmbeddingStore)>,
) -> Result<(Uig, PipelineReport), AugmentError> {
    ds.validate()?;
    if let Some((cfg, _)) = smp {
        cfg.validate()?;
    }
    let n = uig.trajectories.len();
    if n < ds.m {
        return Err(AugmentError::PoolTooSmall { have: n, need: ds.m });
    }

    let mut working = uig.clone();
    let mut pool = std::mem::take(&mut working.trajectories);
    let mut report = PipelineReport { iterations: n / ds.m, ..PipelineReport::default() };

    for i in 0..report.iterations {
        let iter_seed = derive_seed(ds.seed, &["iter", &i.to_string()]);
        let (sample, remainder) = sample_without_replacement(&pool, ds.m, iter_seed)?;
        let mut iter_ds = ds.clone();
        iter_ds.seed = iter_seed;
        let mut shuffled = double_shuffle(&sample, &iter_ds)?;
        report.transformed += shuffled.len();

        if let Some((cfg, store)) = smp {
            let mut iter_smp = cfg.clone();
            iter_smp.seed = derive_seed(cfg.seed, &["iter", &i.to_string()]);
            let outcomes = shuffled
                .par_iter()
                .map(|t| smp_perturb(t, &working, store, &iter_smp))
                .collect::<Result<Vec<_>, _>>()?;
            shuffled.clear();
            for o in outcomes {
                report.perturbed_nodes += o.perturbed;
                report.warnings.extend(o.warnings);
                for rec in o.new_summaries {
                    working.summaries.insert(rec.id.clone(), rec);
                }
                shuffled.push(o.trajectory);
            }
        }

        pool = remainder;
        pool.extend(shuffled);
    }

    working.trajectories = pool;
    Ok((working, report))
}

/// One pipeline configuration inside a mixed bag; the tag names it in user
/// ids ("alice@g25-l150") and in the `config` field of its trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub tag: String,
    pub ds: DsConfig,
    #[serde(default)]
    pub smp: Option<SmpConfig>,
}

fn default_fraction() -> f64 {
    0.10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    pub configs: Vec<MixEntry>,
    /// Fraction of each configuration's output kept in the final bag.
    #[serde(default = "default_fraction")]
    pub sample_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl MixConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.configs.is_empty() {
            return Err(AugmentError::BadConfig("mix has no configurations".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(AugmentError::BadConfig(format!(
                "sample_fraction = {} outside (0, 1]",
                self.sample_fraction
            )));
        }
        let mut tags = std::collections::BTreeSet::new();
        for entry in &self.configs {
            if !tags.insert(&entry.tag) {
                return Err(AugmentError::BadConfig(format!("duplicate mix tag {}", entry.tag)));
            }
            entry.ds.validate()?;
            if let Some(smp) = &entry.smp {
                smp.validate()?;
            }
        }
        Ok(())
    }
}

/// The ten-configuration mixed-bag preset: five gap sweeps at length 150 and
/// five length sweeps at gap 25, each followed by perturbation with
/// lambda 0.3, p 0.8, k 10, with 10% of every output kept.
pub fn mix10(seed: u64) -> MixConfig {
    mix10_scaled(seed, 1.0)
}

/// `mix10` with every length and gap multiplied by `scale` (floored at
/// [`PRESET_SCALE_FLOOR_LEN`] / [`PRESET_SCALE_FLOOR_GAP`]), so the preset
/// can run on small fixtures.
pub fn mix10_scaled(seed: u64, scale: f64) -> MixConfig {
    let len = |l: usize| ((l as f64 * scale) as usize).max(PRESET_SCALE_FLOOR_LEN);
    let gap = |g: usize| ((g as f64 * scale) as usize).max(PRESET_SCALE_FLOOR_GAP);
    let entry = |g: usize, l: usize| MixEntry {
        tag: format!("g{g}-l{l}"),
        ds: DsConfig { m: 3, gap: gap(g), target_len: len(l), ..DsConfig::default() },
        smp: Some(SmpConfig { k: 10, lambda: 0.3, p_smp: 0.8, ..SmpConfig::default() }),
    };
    let mut configs: Vec<MixEntry> = [10, 15, 20, 25, 40].iter().map(|&g| entry(g, 150)).collect();
    configs.extend([50, 100, 125, 175, 200].iter().map(|&l| entry(25, l)));
    MixConfig { configs, sample_fraction: 0.10, seed }
}

/// Runs every configuration's pipeline over the same input pool, keeps a
/// seeded floor(fraction * |output|) sample of each, and concatenates them.
/// Kept trajectories get their config's tag appended to the user id so the
/// bag never collides on users.
pub fn build_mix(
    uig: &Uig,
    mix: &MixConfig,
    store: Option<&EmbeddingStore>,
) -> Result<Uig, AugmentError> {
    mix.validate()?;
    let mut bag: Vec<Trajectory> = Vec::new();
    let mut docs = uig.docs.clone();
    let mut summaries = uig.summaries.clone();

    for entry in &mix.configs {
        let cfg_seed = derive_seed(mix.seed, &["mix", &entry.tag]);
        let mut ds = entry.ds.clone();
        ds.seed = cfg_seed;
        let smp_pair = match &entry.smp {
            Some(smp) => {
                let store = store.ok_or_else(|| {
                    AugmentError::BadConfig(format!(
                        "config {} perturbs summaries but no embedding store was given",
                        entry.tag
                    ))
                })?;
                let mut smp = smp.clone();
                smp.seed = cfg_seed;
                Some((smp, store))
            }
            None => None,
        };
        let out = run_pipeline(uig, &ds, smp_pair.as_ref().map(|(s, st)| (s, *st)))?;

        let keep = (mix.sample_fraction * out.trajectories.len() as f64).floor() as usize;
        if keep == 0 {
            return Err(AugmentError::EmptyMixOutput(entry.tag.clone()));
        }
        let (kept, _) = sample_without_replacement(
            &out.trajectories,
            keep,
            derive_seed(mix.seed, &["mix-sample", &entry.tag]),
        )?;
        for mut t in kept {
            t.user = format!("{}@{}", t.user, entry.tag);
            t.config = entry.tag.clone();
            bag.push(t);
        }
        docs.extend(out.docs);
        summaries.extend(out.summaries);
    }

    Ok(Uig::new(bag, docs, summaries))
}
