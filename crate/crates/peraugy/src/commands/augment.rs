//! `peraugy augment`: grows an ingested pool, either with one
//! shuffle+perturb configuration or with the published 10-configuration
//! mixed bag (`--preset paper-mix`).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use crate::augment::{
    build_mix, mix10_scaled, run_pipeline_with_report, DsConfig, MixConfig, PipelineReport,
    SmpConfig, SmpScope,
};
use crate::embed::EmbeddingStore;
use crate::ingest::write_jsonl;
use crate::uig::Uig;

use super::{
    ensure_out_dir, ingest::read_pool, load_file_config, runtime, usage, write_json, CliError,
    GlobalArgs, RunManifest,
};

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Pool directory from a previous ingest/augment run
    #[arg(long)]
    pub input: PathBuf,
    /// Named recipe; `paper-mix` (alias `mix10`) is the 10-config bag
    #[arg(long)]
    pub preset: Option<String>,
    /// Multiplies preset lengths and gaps (floored at viable minimums)
    #[arg(long, default_value_t = 1.0)]
    pub preset_scale: f64,
    /// Fraction of each preset config's output kept in the bag
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Skip the perturbation stage entirely
    #[arg(long)]
    pub no_smp: bool,
    /// Trajectories per shuffling round (one target plus sources)
    #[arg(long = "ds.m")]
    pub ds_m: Option<usize>,
    /// Original target events kept between substitutions
    #[arg(long = "ds.gap")]
    pub ds_gap: Option<usize>,
    /// Exact output trajectory length
    #[arg(long = "ds.len")]
    pub ds_len: Option<usize>,
    /// Minimum source segment length
    #[arg(long = "ds.seg-min")]
    pub ds_seg_min: Option<usize>,
    /// Maximum source segment length
    #[arg(long = "ds.seg-max")]
    pub ds_seg_max: Option<usize>,
    /// Substitute within the target's own length instead of growing it
    #[arg(long = "ds.in-place")]
    pub ds_in_place: bool,
    /// Context window length for the perturbation
    #[arg(long = "smp.k")]
    pub smp_k: Option<usize>,
    /// Context decay constant
    #[arg(long = "smp.lambda")]
    pub smp_lambda: Option<f64>,
    /// Perturbation probability per eligible summary node
    #[arg(long = "smp.p")]
    pub smp_p: Option<f64>,
    /// Candidate pool size for the final pick
    #[arg(long = "smp.top-p")]
    pub smp_top_p: Option<usize>,
    /// Make every summary node eligible, not just exchanged ones
    #[arg(long = "smp.all-nodes")]
    pub smp_all_nodes: bool,
    /// Binary embedding store; synthesized deterministically when absent
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Dimension of synthesized embeddings
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
}

impl AugmentArgs {
    fn has_manual_overrides(&self) -> bool {
        self.ds_m.is_some()
            || self.ds_gap.is_some()
            || self.ds_len.is_some()
            || self.ds_seg_min.is_some()
            || self.ds_seg_max.is_some()
            || self.ds_in_place
            || self.smp_k.is_some()
            || self.smp_lambda.is_some()
            || self.smp_p.is_some()
            || self.smp_top_p.is_some()
            || self.smp_all_nodes
    }

    fn apply_ds(&self, mut ds: DsConfig, seed: u64) -> DsConfig {
        if let Some(v) = self.ds_m {
            ds.m = v;
        }
        if let Some(v) = self.ds_gap {
            ds.gap = v;
        }
        if let Some(v) = self.ds_len {
            ds.target_len = v;
        }
        if let Some(v) = self.ds_seg_min {
            ds.seg_len_range.0 = v;
        }
        if let Some(v) = self.ds_seg_max {
            ds.seg_len_range.1 = v;
        }
        if self.ds_in_place {
            ds.in_place = true;
        }
        ds.seed = seed;
        ds
    }

    fn apply_smp(&self, mut smp: SmpConfig, seed: u64) -> SmpConfig {
        if let Some(v) = self.smp_k {
            smp.k = v;
        }
        if let Some(v) = self.smp_lambda {
            smp.lambda = v;
        }
        if let Some(v) = self.smp_p {
            smp.p_smp = v;
        }
        if let Some(v) = self.smp_top_p {
            smp.top_p = v;
        }
        if self.smp_all_nodes {
            smp.scope = SmpScope::All;
        }
        smp.seed = seed;
        smp
    }
}

enum Plan {
    Mix(MixConfig),
    Single(DsConfig, Option<SmpConfig>),
}

#[derive(Serialize)]
struct AugmentReport {
    mode: &'static str,
    input_trajectories: usize,
    output_trajectories: usize,
    output_summaries: usize,
    /// Output counts by configuration tag.
    per_config: BTreeMap<String, usize>,
    /// Output counts by provenance kind.
    provenance: BTreeMap<String, usize>,
    pipeline: Option<PipelineReport>,
}

pub fn run(globals: &GlobalArgs, args: &AugmentArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let file = load_file_config(globals.config.as_deref())?;
    let seed = globals.seed;

    let plan = match &args.preset {
        Some(name) => {
            if !matches!(name.as_str(), "paper-mix" | "mix10") {
                return Err(usage(format!(
                    "unknown preset {name}; available: paper-mix (alias mix10)"
                )));
            }
            if args.has_manual_overrides() {
                return Err(usage(
                    "--preset fixes ds/smp settings; drop the --ds.*/--smp.* overrides",
                ));
            }
            let mut mix = mix10_scaled(seed, args.preset_scale);
            if let Some(f) = args.fraction {
                mix.sample_fraction = f;
            }
            if args.no_smp {
                for entry in &mut mix.configs {
                    entry.smp = None;
                }
            }
            Plan::Mix(mix)
        }
        None => match &file.mix {
            Some(mix) => {
                if args.has_manual_overrides() {
                    return Err(usage(
                        "config file defines a mix; drop the --ds.*/--smp.* overrides",
                    ));
                }
                let mut mix = mix.clone();
                mix.seed = seed;
                if let Some(f) = args.fraction {
                    mix.sample_fraction = f;
                }
                if args.no_smp {
                    for entry in &mut mix.configs {
                        entry.smp = None;
                    }
                }
                Plan::Mix(mix)
            }
            None => {
                let ds = args.apply_ds(file.ds.clone().unwrap_or_default(), seed);
                let smp = if args.no_smp {
                    None
                } else {
                    Some(args.apply_smp(file.smp.clone().unwrap_or_default(), seed))
                };
                Plan::Single(ds, smp)
            }
        },
    };

    // config validation failures are reported all at once
    let mut problems = Vec::new();
    match &plan {
        Plan::Mix(mix) => {
            if let Err(e) = mix.validate() {
                problems.push(format!("mix: {e}"));
            }
        }
        Plan::Single(ds, smp) => {
            if let Err(e) = ds.validate() {
                problems.push(format!("ds: {e}"));
            }
            if let Some(smp) = smp {
                if let Err(e) = smp.validate() {
                    problems.push(format!("smp: {e}"));
                }
            }
        }
    }
    if !problems.is_empty() {
        return Err(usage(problems.join("; ")));
    }

    let mut manifest = RunManifest::new(
        "augment",
        seed,
        globals.jobs,
        match &plan {
            Plan::Mix(mix) => serde_json::json!({"mode": "mix", "mix": mix}),
            Plan::Single(ds, smp) => serde_json::json!({"mode": "single", "ds": ds, "smp": smp}),
        },
    );
    let uig = read_pool(&args.input, &mut manifest)?;

    let needs_store = match &plan {
        Plan::Mix(mix) => mix.configs.iter().any(|e| e.smp.is_some()),
        Plan::Single(_, smp) => smp.is_some(),
    };
    let store = if needs_store {
        Some(resolve_store(
            &uig,
            args.embeddings.as_deref(),
            args.dim,
            seed,
            &mut manifest,
        )?)
    } else {
        None
    };

    let (out, mode, pipeline) = match &plan {
        Plan::Mix(mix) => {
            let out = build_mix(&uig, mix, store.as_ref()).map_err(runtime)?;
            (out, "mix", None)
        }
        Plan::Single(ds, smp) => {
            let smp_arg = smp.as_ref().map(|cfg| (cfg, store.as_ref().expect("store")));
            let (out, report) = run_pipeline_with_report(&uig, ds, smp_arg).map_err(runtime)?;
            (out, "single", Some(report))
        }
    };

    let paths = write_jsonl(&out, &globals.out_dir).map_err(runtime)?;
    for p in [&paths.trajectories, &paths.docs, &paths.summaries] {
        manifest.record_output(p);
    }
    let report = AugmentReport {
        mode,
        input_trajectories: uig.trajectories.len(),
        output_trajectories: out.trajectories.len(),
        output_summaries: out.summaries.len(),
        per_config: count_by(&out, |t| t.config.clone()),
        provenance: count_by(&out, |t| format!("{:?}", t.provenance).to_lowercase()),
        pipeline,
    };
    let report_path = globals.out_dir.join("augment_report.json");
    write_json(&report_path, &report)?;
    manifest.record_output(&report_path);
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    println!(
        "augmented {} -> {} trajectories ({} summaries) -> {}",
        report.input_trajectories,
        report.output_trajectories,
        report.output_summaries,
        globals.out_dir.display()
    );
    Ok(())
}

fn count_by(uig: &Uig, key: impl Fn(&crate::uig::Trajectory) -> String) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for t in &uig.trajectories {
        *counts.entry(key(t)).or_insert(0) += 1;
    }
    counts
}

/// Loads an embedding store or synthesizes a deterministic one from the
/// pool. Synthetic vectors are pure functions of (text, dim, seed), so
/// downstream stages regenerate identical vectors without persisting them.
pub(super) fn resolve_store(
    uig: &Uig,
    embeddings: Option<&std::path::Path>,
    dim: usize,
    seed: u64,
    manifest: &mut RunManifest,
) -> Result<EmbeddingStore, CliError> {
    match embeddings {
        Some(path) => {
            manifest.record_input(path).map_err(runtime)?;
            EmbeddingStore::load(path).map_err(runtime)
        }
        None => Ok(EmbeddingStore::synthesize(uig, dim, seed)),
    }
}
