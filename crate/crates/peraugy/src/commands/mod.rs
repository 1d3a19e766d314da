//! Batch pipeline commands. Each subcommand reads files, writes files plus
//! one `manifest.json`, and never pipes to another stage, so any stage can
//! be re-run in isolation. All randomness flows from the single `--seed`
//! through named sub-streams; `--jobs` changes scheduling, never output.

mod augment;
mod ingest;
pub mod manifest;
mod rank;
mod report;
mod score;
mod stability;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::augment::{DsConfig, MixConfig, SmpConfig};
use crate::diversity::DiversityConfig;

pub use manifest::{sha256_file, InputDigest, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "peraugy",
    version,
    about = "Preference-pool augmentation and personalization metrics"
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; every random decision derives from it.
    #[arg(long, global = true, default_value_t = 0, env = "PERAUGY_SEED")]
    pub seed: u64,
    /// Worker threads (0 = library default). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0, env = "PERAUGY_JOBS")]
    pub jobs: usize,
    /// TOML or JSON config file; command-line flags override its values.
    #[arg(long, global = true, env = "PERAUGY_CONFIG")]
    pub config: Option<PathBuf>,
    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, default_value = "out", env = "PERAUGY_OUT_DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a canonical trajectory pool from raw data or a generator
    Ingest(ingest::IngestArgs),
    /// Grow a pool by double shuffling plus Markovian perturbation
    Augment(augment::AugmentArgs),
    /// Topic and embedding diversity of a pool
    Diversity(score::DiversityArgs),
    /// Personalization scores for generated summaries
    Score(score::ScoreArgs),
    /// Ranking accuracy over scored candidate lists
    Rank(rank::RankArgs),
    /// Correlate a diversity series against an accuracy series
    Correlate(stability::CorrelateArgs),
    /// Squeeze bounds and ranking stability under metric distortions
    Stability(stability::StabilityArgs),
    /// Aggregate stage outputs into one summary
    Report(report::ReportArgs),
}

/// Command failures split by exit code: usage/config problems exit 2,
/// runtime failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub(crate) fn runtime(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(err.into())
}

/// Parses argv and runs; returns the process exit code.
pub fn main() -> i32 {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> i32 {
    if cli.globals.jobs > 0 {
        // a second init in the same process keeps the first pool; outputs
        // are thread-count independent so this is only a sizing hint
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.globals.jobs)
            .build_global();
    }
    let result = match &cli.command {
        Command::Ingest(args) => ingest::run(&cli.globals, args),
        Command::Augment(args) => augment::run(&cli.globals, args),
        Command::Diversity(args) => score::run_diversity(&cli.globals, args),
        Command::Score(args) => score::run_score(&cli.globals, args),
        Command::Rank(args) => rank::run(&cli.globals, args),
        Command::Correlate(args) => stability::run_correlate(&cli.globals, args),
        Command::Stability(args) => stability::run_stability(&cli.globals, args),
        Command::Report(args) => report::run(&cli.globals, args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

/// On-disk mirror of the library configs. Sections are optional; flags
/// override whatever the file sets.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub ds: Option<DsConfig>,
    pub smp: Option<SmpConfig>,
    pub mix: Option<MixConfig>,
    pub diversity: Option<DiversityConfig>,
}

pub(crate) fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let is_toml = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("toml"))
        .unwrap_or(false);
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| format!("{e}"))
    } else {
        serde_json::from_str(&text).map_err(|e| format!("{e}"))
    };
    parsed.map_err(|e| usage(format!("config {}: {e}", path.display())))
}

pub(crate) fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))
}

/// Pretty JSON with a trailing newline; key order comes from struct/BTreeMap
/// definitions, so bytes are stable across runs.
pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut body = serde_json::to_vec_pretty(value).map_err(runtime)?;
    body.push(b'\n');
    std::fs::write(path, body).map_err(runtime)
}

/// Required-for-this-mode flag lookup.
pub(crate) fn need<'a, T>(opt: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    opt.as_ref()
        .ok_or_else(|| usage(format!("{flag} is required here")))
}

pub(crate) fn open_file(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path)
        .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))
}

/// Reads a two-column `label,value` CSV into an ordered map.
pub(crate) fn read_series(path: &Path) -> Result<std::collections::BTreeMap<String, f64>, CliError> {
    let mut out = std::collections::BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(open_file(path)?);
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(runtime)?;
        if row.len() < 2 {
            return Err(runtime(anyhow::anyhow!(
                "{} row {}: expected label,value",
                path.display(),
                i + 2
            )));
        }
        let label = row[0].to_string();
        let value: f64 = row[1].trim().parse().map_err(|e| {
            runtime(anyhow::anyhow!("{} row {}: {e}", path.display(), i + 2))
        })?;
        if out.insert(label.clone(), value).is_some() {
            return Err(runtime(anyhow::anyhow!(
                "{}: duplicate label {label}",
                path.display()
            )));
        }
    }
    if out.is_empty() {
        return Err(runtime(anyhow::anyhow!("{}: no data rows", path.display())));
    }
    Ok(out)
}
