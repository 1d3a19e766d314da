//! Run manifests: every command leaves exactly one `manifest.json` in its
//! output directory recording the command, the full effective config, seed,
//! input digests, and written paths, so any stage can be reproduced from
//! the manifest alone. Wall time is the one non-deterministic field.

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Requested worker count; 0 means the default pool. Outputs never
    /// depend on it.
    pub jobs: usize,
    /// Effective configuration after file and flag merging.
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub wall_ms: u128,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, jobs: usize, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "peraugy".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            jobs,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn record_input(&mut self, path: impl AsRef<Path>) -> io::Result<()> {
        let path = path.as_ref();
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: impl AsRef<Path>) {
        self.outputs.push(path.as_ref().display().to_string());
    }

    /// Stamps the wall time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, started: Instant, dir: impl AsRef<Path>) -> io::Result<PathBuf> {
        self.wall_ms = started.elapsed().as_millis();
        let path = dir.as_ref().join("manifest.json");
        let mut body = serde_json::to_vec_pretty(&self)?;
        body.push(b'\n');
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

pub fn sha256_file(path: impl AsRef<Path>) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_digest_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_lands_as_single_json_file() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        std::fs::write(&input, "{}\n").unwrap();
        let mut m = RunManifest::new("ingest", 7, 2, serde_json::json!({"style": "synth"}));
        m.record_input(&input).unwrap();
        m.record_output(dir.path().join("trajectories.jsonl"));
        let path = m.finish(Instant::now(), dir.path()).unwrap();
        assert_eq!(path.file_name().unwrap(), "manifest.json");

        let back: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back.command, "ingest");
        assert_eq!(back.seed, 7);
        assert_eq!(back.inputs.len(), 1);
        assert_eq!(back.outputs.len(), 1);
        let manifests = std::fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name() == "manifest.json")
            .count();
        assert_eq!(manifests, 1);
    }
}
