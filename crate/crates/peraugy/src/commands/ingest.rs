//! `peraugy ingest`: raw sources (or the synthetic generator) to canonical
//! JSONL pool files plus a validation report.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::ingest::{
    build_uig_oai, build_uig_pens, inject_snodes_pens, parse_gold_tsv, parse_news_tsv,
    parse_oai_jsonl, parse_pens_tsv, synth_pool, write_jsonl, BuildReport, NewsColumns,
    PensColumns, SynthConfig,
};
use crate::uig::{validate, Uig, ValidationReport};

use super::{
    ensure_out_dir, need, open_file, runtime, usage, write_json, CliError, GlobalArgs, RunManifest,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetStyle {
    /// Impression logs + news table (TSV)
    Pens,
    /// Per-post summary ratings (JSONL)
    Oai,
    /// Re-validate and rewrite an existing canonical pool
    Jsonl,
    /// Seeded synthetic pool, no input files
    Synth,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum, default_value_t = DatasetStyle::Pens)]
    pub dataset_style: DatasetStyle,
    /// Impression log TSV (pens)
    #[arg(long)]
    pub behaviors: Option<PathBuf>,
    /// News document table TSV (pens)
    #[arg(long)]
    pub news: Option<PathBuf>,
    /// Gold summary TSV attaching s-nodes (pens, optional)
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Ratings JSONL (oai)
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Confidence a summary must exceed for its post to count as clicked
    #[arg(long, default_value_t = 6)]
    pub threshold: i64,
    /// Directory with trajectories/docs/summaries JSONL (jsonl style)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Write outputs even when rows were skipped or validation failed
    #[arg(long)]
    pub lenient: bool,
    /// Users in a generated pool (synth)
    #[arg(long, default_value_t = 100)]
    pub synth_users: usize,
    /// Events per generated trajectory (synth)
    #[arg(long, default_value_t = 30)]
    pub synth_len: usize,
    /// Shared documents in a generated pool (synth)
    #[arg(long, default_value_t = 200)]
    pub synth_docs: usize,
}

#[derive(Serialize)]
struct IngestReport<'a> {
    style: &'a str,
    trajectories: usize,
    docs: usize,
    summaries: usize,
    skipped_rows: Vec<String>,
    warnings: &'a [String],
    validation: &'a ValidationReport,
}

pub fn run(globals: &GlobalArgs, args: &IngestArgs) -> Result<(), CliError> {
    let started = Instant::now();
    ensure_out_dir(&globals.out_dir)?;
    let mut manifest = RunManifest::new(
        "ingest",
        globals.seed,
        globals.jobs,
        serde_json::json!({
            "dataset_style": format!("{:?}", args.dataset_style).to_lowercase(),
            "threshold": args.threshold,
            "lenient": args.lenient,
            "synth": { "users": args.synth_users, "len": args.synth_len, "docs": args.synth_docs },
        }),
    );

    let (style, uig, build) = match args.dataset_style {
        DatasetStyle::Pens => {
            let behaviors = need(&args.behaviors, "--behaviors")?;
            let news = need(&args.news, "--news")?;
            manifest.record_input(behaviors).map_err(runtime)?;
            manifest.record_input(news).map_err(runtime)?;
            let rows = parse_pens_tsv(open_file(behaviors)?, &PensColumns::default())
                .map_err(runtime)?;
            let docs =
                parse_news_tsv(open_file(news)?, &NewsColumns::default()).map_err(runtime)?;
            let (mut uig, mut build) = build_uig_pens(&rows, &docs);
            if let Some(gold) = &args.gold {
                manifest.record_input(gold).map_err(runtime)?;
                let summaries = parse_gold_tsv(open_file(gold)?).map_err(runtime)?;
                let (with_snodes, inject) = inject_snodes_pens(&uig, &summaries);
                uig = with_snodes;
                build.skipped_rows.extend(inject.skipped_rows);
                build.warnings.extend(inject.warnings);
            }
            ("pens", uig, build)
        }
        DatasetStyle::Oai => {
            let ratings = need(&args.ratings, "--ratings")?;
            manifest.record_input(ratings).map_err(runtime)?;
            let rows = parse_oai_jsonl(open_file(ratings)?).map_err(runtime)?;
            let (uig, build) =
                build_uig_oai(&rows, args.threshold, globals.seed).map_err(runtime)?;
            ("oai", uig, build)
        }
        DatasetStyle::Jsonl => {
            let input = need(&args.input, "--input")?;
            let uig = read_pool(input, &mut manifest)?;
            ("jsonl", uig, BuildReport::default())
        }
        DatasetStyle::Synth => {
            let cfg = SynthConfig {
                users: args.synth_users,
                len: args.synth_len,
                docs: args.synth_docs,
                seed: globals.seed,
                ..SynthConfig::default()
            };
            ("synth", synth_pool(&cfg), BuildReport::default())
        }
    };

    let validation = validate(&uig);
    let paths = write_jsonl(&uig, &globals.out_dir).map_err(runtime)?;
    for p in [&paths.trajectories, &paths.docs, &paths.summaries] {
        manifest.record_output(p);
    }
    let report_path = globals.out_dir.join("ingest_report.json");
    write_json(
        &report_path,
        &IngestReport {
            style,
            trajectories: uig.trajectories.len(),
            docs: uig.docs.len(),
            summaries: uig.summaries.len(),
            skipped_rows: build
                .skipped_rows
                .iter()
                .map(|i| format!("row {} (user {}): {}", i.row, i.user, i.detail))
                .collect(),
            warnings: &build.warnings,
            validation: &validation,
        },
    )?;
    manifest.record_output(&report_path);
    manifest.finish(started, &globals.out_dir).map_err(runtime)?;

    println!(
        "ingested {} trajectories, {} docs, {} summaries -> {}",
        uig.trajectories.len(),
        uig.docs.len(),
        uig.summaries.len(),
        globals.out_dir.display()
    );
    let dirty = !build.is_clean() || !validation.is_clean();
    if dirty && !args.lenient {
        return Err(runtime(anyhow::anyhow!(
            "{} skipped rows, {} warnings, {} validation errors (see {}); pass --lenient to accept",
            build.skipped_rows.len(),
            build.warnings.len(),
            validation.errors.len(),
            report_path.display()
        )));
    }
    Ok(())
}

/// Reads a canonical pool directory, recording the three files as inputs.
pub(super) fn read_pool(
    dir: &std::path::Path,
    manifest: &mut RunManifest,
) -> Result<Uig, CliError> {
    let paths = crate::ingest::JsonlPaths::in_dir(dir);
    for p in [&paths.trajectories, &paths.docs, &paths.summaries] {
        if !p.exists() {
            return Err(usage(format!("missing pool file {}", p.display())));
        }
        manifest.record_input(p).map_err(runtime)?;
    }
    crate::ingest::read_jsonl_files(&paths).map_err(runtime)
}
