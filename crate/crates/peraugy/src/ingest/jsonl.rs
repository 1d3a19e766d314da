//! Canonical on-disk format: trajectories, docs, and summaries as three JSONL
//! files with stable field order, so equal pools serialize to equal bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::uig::{DocRecord, SummaryRecord, Trajectory, Uig};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonlPaths {
    pub trajectories: PathBuf,
    pub docs: PathBuf,
    pub summaries: PathBuf,
}

impl JsonlPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        JsonlPaths {
            trajectories: dir.join("trajectories.jsonl"),
            docs: dir.join("docs.jsonl"),
            summaries: dir.join("summaries.jsonl"),
        }
    }
}

fn write_lines<T: Serialize>(path: &Path, items: impl Iterator<Item = T>) -> Result<(), IngestError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|source| IngestError::JsonLine {
            file: path.display().to_string(),
            line: 0,
            source,
        })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| IngestError::JsonLine {
            file: path.display().to_string(),
            line: i as u64 + 1,
            source,
        })?);
    }
    Ok(out)
}

/// Writes the pool into `dir` (created if needed) as trajectories.jsonl,
/// docs.jsonl, and summaries.jsonl.
pub fn write_jsonl(uig: &Uig, dir: impl AsRef<Path>) -> Result<JsonlPaths, IngestError> {
    std::fs::create_dir_all(&dir)?;
    let paths = JsonlPaths::in_dir(dir);
    write_jsonl_files(uig, &paths)?;
    Ok(paths)
}

pub fn write_jsonl_files(uig: &Uig, paths: &JsonlPaths) -> Result<(), IngestError> {
    write_lines(&paths.trajectories, uig.trajectories.iter())?;
    write_lines(&paths.docs, uig.docs.values())?;
    write_lines(&paths.summaries, uig.summaries.values())?;
    Ok(())
}

pub fn read_jsonl(dir: impl AsRef<Path>) -> Result<Uig, IngestError> {
    read_jsonl_files(&JsonlPaths::in_dir(dir))
}

pub fn read_jsonl_files(paths: &JsonlPaths) -> Result<Uig, IngestError> {
    let trajectories: Vec<Trajectory> = read_lines(&paths.trajectories)?;
    let docs: Vec<DocRecord> = read_lines(&paths.docs)?;
    let summaries: Vec<SummaryRecord> = read_lines(&paths.summaries)?;
    Ok(Uig::new(
        trajectories,
        docs.into_iter().map(|d| (d.id.clone(), d)).collect(),
        summaries.into_iter().map(|s| (s.id.clone(), s)).collect(),
    ))
}
