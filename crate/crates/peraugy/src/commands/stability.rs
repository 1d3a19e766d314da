//! `peraugy correlate` and `peraugy stability`: dataset-level correlation
//! tables and metric-distortion stability reports.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use crate::diversity::{degreed, DiversityConfig};
use crate::stats::{
    ambiguity_band, diversity_accuracy_correlation, pure_scaling_distortion, rank_stability,
    squeeze_check, weighted_window_distortion, CorrelationRow, CorrelationTable,
    RankStabilityReport, SqueezeReport, StabilityInput,
};
use crate::uig::Uig;

use super::{
    augment::resolve_store, ensure_out_dir, ingest::read_pool, load_file_config, read_series,
    runtime, usage, write_json, CliError, GlobalArgs, RunManifest,
};

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// CSV (label,value): per-dataset diversity scores
    #[arg(long)]
    pub diversity: PathBuf,
    /// CSV (label,value): per-dataset accuracy scores
    #[arg(long)]
    pub accuracy: PathBuf,
}

pub fn run_correlate(globals: &GlobalArgs, args: &CorrelateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let mut manifest = RunManifest::new(
        "correlate",
        globals.seed,
        globals.jobs,
        serde_json::json!({
            "diversity": args.diversity.display().to_string(),
            "accuracy": args.accuracy.display().to_string(),
        }),
    );
    manifest.record_input(&args.diversity).map_err(runtime)?;
    manifest.record_input(&args.accuracy).map_err(runtime)?;

    let div = read_series(&args.diversity)?;
    let acc = read_series(&args.accuracy)?;
    let table = diversity_accuracy_correlation(&div, &acc).map_err(runtime)?;

    let json_path = globals.out_dir.join("correlate.json");
    write_json(&json_path, &table)?;
    manifest.record_output(&json_path);
    let csv_path = globals.out_dir.join("correlate.csv");
    write_correlation_csv(&csv_path, &table)?;
    manifest.record_output(&csv_path);
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    let p = table
        .full
        .pearson
        .map_or("undefined".to_string(), |v| format!("{v:.4}"));
    println!(
        "pearson={p} spearman={:.4} kendall={:.4} over {} datasets -> {}",
        table.full.spearman,
        table.full.kendall,
        table.labels.len(),
        globals.out_dir.display()
    );
    Ok(())
}

fn write_correlation_csv(path: &std::path::Path, table: &CorrelationTable) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(["scope", "pearson", "spearman", "kendall"]).map_err(runtime)?;
    let fmt = |row: &CorrelationRow| {
        [
            row.pearson.map_or(String::new(), |v| v.to_string()),
            row.spearman.to_string(),
            row.kendall.to_string(),
        ]
    };
    let full = fmt(&table.full);
    w.write_record(["full", &full[0], &full[1], &full[2]]).map_err(runtime)?;
    for (label, row) in &table.leave_one_out {
        let cells = fmt(row);
        w.write_record([&format!("without {label}"), &cells[0], &cells[1], &cells[2]])
            .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Pool directory; datasets are the distinct trajectory config tags
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Binary embedding store; synthesized deterministically when absent
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Dimension of synthesized embeddings
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Pure scaling distortion: lambda = Lambda = SCALE
    #[arg(long)]
    pub scale: Option<f64>,
    /// Lower modulus of a random per-coordinate weighting
    #[arg(long)]
    pub window_lo: Option<f64>,
    /// Upper modulus of a random per-coordinate weighting
    #[arg(long)]
    pub window_hi: Option<f64>,
    /// Extra seed salt for the window weights
    #[arg(long, default_value_t = 0)]
    pub distort_seed: u64,
    /// Precomputed reference series CSV (label,value) instead of --input
    #[arg(long)]
    pub f_table: Option<PathBuf>,
    /// Precomputed distorted series CSV (label,value)
    #[arg(long)]
    pub g_table: Option<PathBuf>,
    /// Distortion window lower bound for table mode
    #[arg(long)]
    pub lambda_lo: Option<f64>,
    /// Distortion window upper bound for table mode
    #[arg(long)]
    pub lambda_hi: Option<f64>,
    /// Optional accuracy series CSV to correlate both metric versions against
    #[arg(long)]
    pub accuracy: Option<PathBuf>,
}

#[derive(Serialize)]
struct StabilityReportFile {
    mode: &'static str,
    lambda_lo: f64,
    lambda_hi: f64,
    labels: Vec<String>,
    f: Vec<f64>,
    g: Vec<f64>,
    band: (f64, f64),
    squeeze: SqueezeReport,
    rank: RankStabilityReport,
    /// Correlations of each metric version against the accuracy series.
    correlations: Option<CorrelationPair>,
}

#[derive(Serialize)]
struct CorrelationPair {
    reference: CorrelationRow,
    distorted: CorrelationRow,
}

pub fn run_stability(globals: &GlobalArgs, args: &StabilityArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let mut manifest = RunManifest::new(
        "stability",
        globals.seed,
        globals.jobs,
        serde_json::json!({
            "scale": args.scale,
            "window": [args.window_lo, args.window_hi],
            "distort_seed": args.distort_seed,
            "tables": args.f_table.is_some(),
        }),
    );

    let (mode, labels, f, g, lo, hi) = if args.f_table.is_some() || args.g_table.is_some() {
        if args.input.is_some() || args.scale.is_some() || args.window_lo.is_some() {
            return Err(usage("table mode takes --f-table/--g-table/--lambda-lo/--lambda-hi only"));
        }
        let f_path = super::need(&args.f_table, "--f-table")?;
        let g_path = super::need(&args.g_table, "--g-table")?;
        manifest.record_input(f_path).map_err(runtime)?;
        manifest.record_input(g_path).map_err(runtime)?;
        let f_map = read_series(f_path)?;
        let g_map = read_series(g_path)?;
        let missing: Vec<&str> = f_map
            .keys()
            .filter(|k| !g_map.contains_key(*k))
            .chain(g_map.keys().filter(|k| !f_map.contains_key(*k)))
            .map(|k| k.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(runtime(anyhow::anyhow!(
                "table labels do not align: {}",
                missing.join(", ")
            )));
        }
        let lo = *super::need(&args.lambda_lo, "--lambda-lo")?;
        let hi = *super::need(&args.lambda_hi, "--lambda-hi")?;
        let labels: Vec<String> = f_map.keys().cloned().collect();
        let f: Vec<f64> = labels.iter().map(|l| f_map[l]).collect();
        let g: Vec<f64> = labels.iter().map(|l| g_map[l]).collect();
        ("tables", labels, f, g, lo, hi)
    } else {
        let input = super::need(&args.input, "--input")?;
        recompute_series(globals, args, input, &mut manifest)?
    };

    let si = StabilityInput {
        labels: labels.clone(),
        f: f.clone(),
        g: g.clone(),
        a: None,
        lambda_lo: lo,
        lambda_hi: hi,
    };
    let squeeze = squeeze_check(&si).map_err(runtime)?;
    let band = ambiguity_band(lo, hi).map_err(runtime)?;
    let rank = rank_stability(&si).map_err(runtime)?;

    let correlations = match &args.accuracy {
        Some(path) => {
            manifest.record_input(path).map_err(runtime)?;
            let acc = read_series(path)?;
            let zip = |vals: &[f64]| -> BTreeMap<String, f64> {
                labels.iter().cloned().zip(vals.iter().copied()).collect()
            };
            let f_tab = diversity_accuracy_correlation(&zip(&f), &acc).map_err(runtime)?;
            let g_tab = diversity_accuracy_correlation(&zip(&g), &acc).map_err(runtime)?;
            Some(CorrelationPair { reference: f_tab.full, distorted: g_tab.full })
        }
        None => None,
    };

    let report = StabilityReportFile {
        mode,
        lambda_lo: lo,
        lambda_hi: hi,
        labels: labels.clone(),
        f: f.clone(),
        g: g.clone(),
        band,
        squeeze,
        rank,
        correlations,
    };
    let json_path = globals.out_dir.join("stability.json");
    write_json(&json_path, &report)?;
    manifest.record_output(&json_path);

    let csv_path = globals.out_dir.join("stability.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(runtime)?;
    w.write_record(["label", "f", "g", "lower", "upper", "pass"]).map_err(runtime)?;
    for v in &report.squeeze.verdicts {
        w.write_record([
            v.label.clone(),
            v.f.to_string(),
            v.g.to_string(),
            v.lower.to_string(),
            v.upper.to_string(),
            v.pass.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    manifest.record_output(&csv_path);
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    println!(
        "squeeze {} ({} datasets), {} inversions, rho_s={:.4} -> {}",
        if report.squeeze.all_pass { "pass" } else { "FAIL" },
        labels.len(),
        report.rank.inversions.len(),
        report.rank.spearman_rho,
        globals.out_dir.display()
    );
    Ok(())
}

type Series = (&'static str, Vec<String>, Vec<f64>, Vec<f64>, f64, f64);

/// Splits the pool by config tag and scores each sub-pool twice: under the
/// configured base metric and under the requested distortion.
fn recompute_series(
    globals: &GlobalArgs,
    args: &StabilityArgs,
    input: &std::path::Path,
    manifest: &mut RunManifest,
) -> Result<Series, CliError> {
    let file = load_file_config(globals.config.as_deref())?;
    let base_cfg = file.diversity.clone().unwrap_or_default();
    let uig = read_pool(input, manifest)?;
    let store = resolve_store(
        &uig,
        args.embeddings.as_deref(),
        args.dim,
        globals.seed,
        manifest,
    )?;
    let dim = store.dim();

    let (mode, warped_cfg, lo, hi): (&'static str, DiversityConfig, f64, f64) =
        match (args.scale, args.window_lo, args.window_hi) {
            (Some(c), None, None) => {
                let cfg = DiversityConfig {
                    metric: pure_scaling_distortion(dim, c).map_err(runtime)?,
                    // the ratio guard must scale with the distances for the
                    // scaling to stay exact
                    epsilon: base_cfg.epsilon * c,
                    ..base_cfg.clone()
                };
                ("scale", cfg, c, c)
            }
            (None, Some(lo), Some(hi)) => {
                let metric = weighted_window_distortion(dim, lo, hi, args.distort_seed)
                    .map_err(runtime)?;
                ("window", DiversityConfig { metric, ..base_cfg.clone() }, lo, hi)
            }
            _ => {
                return Err(usage(
                    "pick a distortion: --scale C, or --window-lo LO --window-hi HI",
                ))
            }
        };

    let mut groups: BTreeMap<String, Vec<crate::uig::Trajectory>> = BTreeMap::new();
    for t in &uig.trajectories {
        groups.entry(t.config.clone()).or_default().push(t.clone());
    }
    if groups.len() < 2 {
        return Err(runtime(anyhow::anyhow!(
            "stability needs at least two dataset tags, found {} (augment with a mix first)",
            groups.len()
        )));
    }

    let mut labels = Vec::new();
    let mut f = Vec::new();
    let mut g = Vec::new();
    for (tag, trajectories) in groups {
        let sub = Uig::new(trajectories, uig.docs.clone(), uig.summaries.clone());
        let base = degreed(&sub, &store, &base_cfg).map_err(runtime)?;
        let warped = degreed(&sub, &store, &warped_cfg).map_err(runtime)?;
        labels.push(tag);
        f.push(base.degreed);
        g.push(warped.degreed);
    }
    Ok((mode, labels, f, g, lo, hi))
}
