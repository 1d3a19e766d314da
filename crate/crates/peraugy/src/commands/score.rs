//! `peraugy diversity` and `peraugy score`: pool-level diversity metrics
//! and per-summary personalization scores.

use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use crate::diversity::{degreed, DiversityReport};
use crate::summ_eval::{perseval, EvalInstance, PersevalParams, PersevalReport, WeightPolicy};

use super::{
    augment::resolve_store, ensure_out_dir, ingest::read_pool, load_file_config, open_file,
    runtime, write_json, CliError, GlobalArgs, RunManifest,
};

#[derive(Debug, Args)]
pub struct DiversityArgs {
    /// Pool directory from ingest or augment
    #[arg(long)]
    pub input: PathBuf,
    /// Binary embedding store; synthesized deterministically when absent
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Dimension of synthesized embeddings
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Scale regulator on the final diversity score
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Ratio guard added to numerators and denominators
    #[arg(long)]
    pub epsilon: Option<f64>,
}

pub fn run_diversity(globals: &GlobalArgs, args: &DiversityArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let file = load_file_config(globals.config.as_deref())?;
    let mut cfg = file.diversity.clone().unwrap_or_default();
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
    }

    let mut manifest = RunManifest::new(
        "diversity",
        globals.seed,
        globals.jobs,
        serde_json::to_value(&cfg).map_err(runtime)?,
    );
    let uig = read_pool(&args.input, &mut manifest)?;
    let store = resolve_store(
        &uig,
        args.embeddings.as_deref(),
        args.dim,
        globals.seed,
        &mut manifest,
    )?;

    let report = degreed(&uig, &store, &cfg).map_err(runtime)?;
    let json_path = globals.out_dir.join("diversity.json");
    write_json(&json_path, &report)?;
    manifest.record_output(&json_path);
    write_diversity_csvs(globals, &report, &mut manifest)?;
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    let fmt = |v: Option<f64>| v.map_or("n/a".into(), |x| format!("{x:.4}"));
    println!(
        "TP={} RTC={} DegreeD={:.6} over {} users -> {}",
        fmt(report.tp),
        fmt(report.rtc),
        report.degreed,
        report.per_user.len(),
        globals.out_dir.display()
    );
    Ok(())
}

fn write_diversity_csvs(
    globals: &GlobalArgs,
    report: &DiversityReport,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let user_path = globals.out_dir.join("per_user.csv");
    let mut w = csv::Writer::from_path(&user_path).map_err(runtime)?;
    w.write_record(["user", "intervals", "mean_delta_s", "mean_penalized_deps", "contribution"])
        .map_err(runtime)?;
    for u in &report.per_user {
        w.write_record([
            u.user.clone(),
            u.interval_count.to_string(),
            u.mean_delta_s.to_string(),
            u.mean_penalized_deps.to_string(),
            u.contribution.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    manifest.record_output(&user_path);

    let iv_path = globals.out_dir.join("per_interval.csv");
    let mut w = csv::Writer::from_path(&iv_path).map_err(runtime)?;
    w.write_record(["user", "from", "to", "delta_d", "delta_s", "deps", "penalty"])
        .map_err(runtime)?;
    for r in &report.per_interval {
        w.write_record([
            r.user.clone(),
            r.interval.0.to_string(),
            r.interval.1.to_string(),
            r.delta_d.to_string(),
            r.delta_s.to_string(),
            r.deps.to_string(),
            r.penalty.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    manifest.record_output(&iv_path);
    Ok(())
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// JSONL file, one evaluation instance (doc, users, gold, generated) per line
    #[arg(long)]
    pub instances: PathBuf,
    /// Dampening exponent for the responsiveness penalty
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Dampening exponent inside the penalty exponential
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Accuracy-penalty exponent
    #[arg(long, default_value_t = 4.0)]
    pub gamma: f64,
    /// Ratio guard
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Flat summary weights instead of document-softmax
    #[arg(long)]
    pub uniform_weights: bool,
}

#[derive(Serialize)]
struct ScoreSummary<'a> {
    instances: usize,
    pairs: usize,
    system_degress: f64,
    system_perseval: f64,
    degenerate_responsiveness: bool,
    warnings: &'a [String],
}

pub fn run_score(globals: &GlobalArgs, args: &ScoreArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let mut manifest = RunManifest::new(
        "score",
        globals.seed,
        globals.jobs,
        serde_json::json!({
            "alpha": args.alpha,
            "beta": args.beta,
            "gamma": args.gamma,
            "epsilon": args.epsilon,
            "weights": if args.uniform_weights { "uniform" } else { "doc_softmax" },
        }),
    );
    manifest.record_input(&args.instances).map_err(runtime)?;
    let instances = read_instances(&args.instances)?;

    let mut params = PersevalParams::standard();
    params.alpha_exp = args.alpha;
    params.beta_exp = args.beta;
    params.gamma_exp = args.gamma;
    params.epsilon = args.epsilon;
    params.weights = if args.uniform_weights {
        WeightPolicy::Uniform
    } else {
        WeightPolicy::DocSoftmax
    };
    let report = perseval(&instances, &params).map_err(runtime)?;

    let mut warnings = report.warnings.clone();
    // all-identical outputs score everyone alike; say so instead of letting
    // a near-zero number pass silently
    let degenerate = report.system_degress < 1e-6;
    if degenerate {
        warnings.push(format!(
            "degenerate responsiveness: system DEGRESS {} is indistinguishable from zero",
            report.system_degress
        ));
    }
    let json_path = globals.out_dir.join("score.json");
    write_json(
        &json_path,
        &ScoreSummary {
            instances: instances.len(),
            pairs: report.pairs.len(),
            system_degress: report.system_degress,
            system_perseval: report.system_perseval,
            degenerate_responsiveness: degenerate,
            warnings: &warnings,
        },
    )?;
    manifest.record_output(&json_path);
    write_pairs_csv(globals, &report, &mut manifest)?;
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    println!(
        "DEGRESS={:.6} PerSEval={:.6} across {} doc-user pairs -> {}",
        report.system_degress,
        report.system_perseval,
        report.pairs.len(),
        globals.out_dir.display()
    );
    Ok(())
}

fn read_instances(path: &std::path::Path) -> Result<Vec<EvalInstance>, CliError> {
    let reader = BufReader::new(open_file(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(runtime)?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: EvalInstance = serde_json::from_str(&line).map_err(|e| {
            runtime(anyhow::anyhow!("{} line {}: {e}", path.display(), i + 1))
        })?;
        out.push(inst);
    }
    Ok(out)
}

fn write_pairs_csv(
    globals: &GlobalArgs,
    report: &PersevalReport,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let path = globals.out_dir.join("pairs.csv");
    let mut w = csv::Writer::from_path(&path).map_err(runtime)?;
    w.write_record(["doc", "user", "degress", "accuracy", "adp", "acp", "edp", "perseval"])
        .map_err(runtime)?;
    for p in &report.pairs {
        w.write_record([
            p.doc.clone(),
            p.user.clone(),
            p.degress.to_string(),
            p.accuracy.to_string(),
            p.adp.to_string(),
            p.acp.to_string(),
            p.edp.to_string(),
            p.perseval.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    manifest.record_output(&path);
    Ok(())
}
