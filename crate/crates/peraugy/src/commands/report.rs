//! `peraugy report`: folds the JSON artifacts of prior stage directories
//! into one machine-readable summary plus a short human-readable digest.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use serde_json::Value;

use super::{ensure_out_dir, runtime, usage, write_json, CliError, GlobalArgs, RunManifest};

/// Artifact files a stage may leave behind, in presentation order.
const KNOWN: &[&str] = &[
    "ingest_report.json",
    "augment_report.json",
    "diversity.json",
    "score.json",
    "rank.json",
    "correlate.json",
    "stability.json",
];

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Stage output directories to aggregate
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct StageSummary {
    dir: String,
    command: Option<String>,
    seed: Option<u64>,
    artifacts: BTreeMap<String, Value>,
}

pub fn run(globals: &GlobalArgs, args: &ReportArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let mut manifest = RunManifest::new(
        "report",
        globals.seed,
        globals.jobs,
        serde_json::json!({
            "dirs": args.dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>()
        }),
    );

    let mut stages = Vec::new();
    for dir in &args.dirs {
        if !dir.is_dir() {
            return Err(usage(format!("{} is not a directory", dir.display())));
        }
        let mut stage = StageSummary {
            dir: dir.display().to_string(),
            command: None,
            seed: None,
            artifacts: BTreeMap::new(),
        };
        let manifest_path = dir.join("manifest.json");
        if manifest_path.exists() {
            manifest.record_input(&manifest_path).map_err(runtime)?;
            let v: Value = read_json(&manifest_path)?;
            stage.command = v.get("command").and_then(|c| c.as_str()).map(String::from);
            stage.seed = v.get("seed").and_then(|s| s.as_u64());
        }
        for name in KNOWN {
            let path = dir.join(name);
            if path.exists() {
                manifest.record_input(&path).map_err(runtime)?;
                stage.artifacts.insert(name.to_string(), read_json(&path)?);
            }
        }
        if stage.artifacts.is_empty() && stage.command.is_none() {
            return Err(usage(format!(
                "{} holds no recognizable stage outputs",
                dir.display()
            )));
        }
        stages.push(stage);
    }

    let json_path = globals.out_dir.join("report.json");
    write_json(&json_path, &stages)?;
    manifest.record_output(&json_path);
    let md_path = globals.out_dir.join("report.md");
    std::fs::write(&md_path, digest(&stages)).map_err(runtime)?;
    manifest.record_output(&md_path);
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    println!("aggregated {} stage(s) -> {}", stages.len(), globals.out_dir.display());
    Ok(())
}

fn read_json(path: &std::path::Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(runtime)?;
    serde_json::from_str(&text)
        .map_err(|e| runtime(anyhow::anyhow!("{}: {e}", path.display())))
}

fn num(v: &Value, keys: &[&str]) -> Option<f64> {
    let mut cur = v;
    for k in keys {
        cur = cur.get(k)?;
    }
    cur.as_f64()
}

fn digest(stages: &[StageSummary]) -> String {
    let mut out = String::from("# Pipeline report\n");
    for stage in stages {
        let cmd = stage.command.as_deref().unwrap_or("unknown");
        out.push_str(&format!("\n## {} ({cmd})\n", stage.dir));
        if let Some(seed) = stage.seed {
            out.push_str(&format!("- seed: {seed}\n"));
        }
        for (name, v) in &stage.artifacts {
            let line = match name.as_str() {
                "ingest_report.json" => Some(format!(
                    "ingested {} trajectories, {} docs, {} summaries",
                    num(v, &["trajectories"]).unwrap_or(0.0),
                    num(v, &["docs"]).unwrap_or(0.0),
                    num(v, &["summaries"]).unwrap_or(0.0)
                )),
                "augment_report.json" => Some(format!(
                    "augmented to {} trajectories",
                    num(v, &["output_trajectories"]).unwrap_or(0.0)
                )),
                "diversity.json" => Some(format!(
                    "DegreeD {:.6}",
                    num(v, &["degreed"]).unwrap_or(f64::NAN)
                )),
                "score.json" => Some(format!(
                    "DEGRESS {:.6}, PerSEval {:.6}",
                    num(v, &["system_degress"]).unwrap_or(f64::NAN),
                    num(v, &["system_perseval"]).unwrap_or(f64::NAN)
                )),
                "rank.json" => Some(format!(
                    "AUC {:.4}, MRR {:.4}, nDCG {:.4}",
                    num(v, &["auc"]).unwrap_or(f64::NAN),
                    num(v, &["mrr"]).unwrap_or(f64::NAN),
                    num(v, &["ndcg"]).unwrap_or(f64::NAN)
                )),
                "correlate.json" => Some(format!(
                    "spearman {:.4}, kendall {:.4}",
                    num(v, &["full", "spearman"]).unwrap_or(f64::NAN),
                    num(v, &["full", "kendall"]).unwrap_or(f64::NAN)
                )),
                "stability.json" => Some(format!(
                    "squeeze {}, rho_s {:.4}",
                    v.get("squeeze")
                        .and_then(|s| s.get("all_pass"))
                        .and_then(|b| b.as_bool())
                        .map_or("?", |b| if b { "pass" } else { "FAIL" }),
                    num(v, &["rank", "spearman_rho"]).unwrap_or(f64::NAN)
                )),
                _ => None,
            };
            if let Some(line) = line {
                out.push_str(&format!("- {name}: {line}\n"));
            }
        }
    }
    out
}
