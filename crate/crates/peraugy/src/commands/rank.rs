//! `peraugy rank`: ranking accuracy (AUC, MRR, nDCG@k) over per-user
//! scored candidate lists.

use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use crate::rank_eval::{auc, auc_dataset, mrr, ndcg_at_k, ScoredCandidates};

use super::{
    ensure_out_dir, open_file, runtime, write_json, CliError, GlobalArgs, RunManifest,
};

#[derive(Debug, Args)]
pub struct RankArgs {
    /// JSONL file, one user's scored candidate list per line
    #[arg(long)]
    pub input: PathBuf,
    /// Ranking cutoff for nDCG
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Unit gains for positives instead of score gains
    #[arg(long)]
    pub binary: bool,
}

#[derive(Serialize)]
struct RankReport {
    users: usize,
    auc: f64,
    mrr: f64,
    /// Users without positives, excluded from MRR.
    mrr_excluded: Vec<String>,
    ndcg: f64,
    k: usize,
    binary: bool,
}

pub fn run(globals: &GlobalArgs, args: &RankArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let mut manifest = RunManifest::new(
        "rank",
        globals.seed,
        globals.jobs,
        serde_json::json!({"k": args.k, "binary": args.binary}),
    );
    manifest.record_input(&args.input).map_err(runtime)?;

    let tables = read_tables(&args.input)?;
    let (mean_rr, excluded) = mrr(&tables).map_err(runtime)?;
    let report = RankReport {
        users: tables.len(),
        auc: auc_dataset(&tables).map_err(runtime)?,
        mrr: mean_rr,
        mrr_excluded: excluded,
        ndcg: ndcg_at_k(&tables, args.k, args.binary).map_err(runtime)?,
        k: args.k,
        binary: args.binary,
    };
    let json_path = globals.out_dir.join("rank.json");
    write_json(&json_path, &report)?;
    manifest.record_output(&json_path);

    let csv_path = globals.out_dir.join("per_user.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(runtime)?;
    w.write_record(["user", "candidates", "auc"]).map_err(runtime)?;
    for table in &tables {
        w.write_record([
            table.user.clone(),
            table.candidates.len().to_string(),
            auc(table).map_err(runtime)?.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    manifest.record_output(&csv_path);
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    println!(
        "AUC={:.4} MRR={:.4} nDCG@{}={:.4} over {} users -> {}",
        report.auc,
        report.mrr,
        report.k,
        report.ndcg,
        report.users,
        globals.out_dir.display()
    );
    Ok(())
}

fn read_tables(path: &std::path::Path) -> Result<Vec<ScoredCandidates>, CliError> {
    let reader = BufReader::new(open_file(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(runtime)?;
        if line.trim().is_empty() {
            continue;
        }
        let table: ScoredCandidates = serde_json::from_str(&line).map_err(|e| {
            runtime(anyhow::anyhow!("{} line {}: {e}", path.display(), i + 1))
        })?;
        out.push(table);
    }
    Ok(out)
}
