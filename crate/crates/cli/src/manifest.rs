//! Run manifests: what was run, with which seed, and the checksum of every
//! file each stage produced.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub command: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub stages: Vec<StageRecord>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical config; where outputs go does not change the run.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.output.dir.clear();
    sha256_hex(cfg.canonical_json().as_bytes())
}

impl RunManifest {
    pub fn start(cfg: &ExperimentConfig, command: &str) -> Self {
        Self {
            config_hash: config_hash(cfg),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.sim.seed,
            command: command.to_string(),
            started_unix: now(),
            finished_unix: None,
            stages: vec![],
        }
    }

    /// Checksums `paths` (relative names are stored as given) under `stage`.
    pub fn record(&mut self, stage: &str, paths: &[PathBuf]) -> Result<()> {
        let outputs = paths
            .iter()
            .map(|p| {
                Ok(OutputRecord {
                    path: p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()),
                    sha256: sha256_hex(&std::fs::read(p)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.stages.push(StageRecord { stage: stage.to_string(), outputs });
        Ok(())
    }

    pub fn finish(&mut self) {
        self.finished_unix = Some(now());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    /// Same config, seed and per-stage checksums; timestamps are ignored.
    pub fn same_outputs(&self, other: &Self) -> bool {
        self.config_hash == other.config_hash && self.seed == other.seed && self.stages == other.stages
    }
}
