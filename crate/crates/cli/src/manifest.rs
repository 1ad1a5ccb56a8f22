//! `manifest.json`: provenance of everything under the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, stage_seed};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Stages that draw random numbers, each with its own derived seed.
pub const SEEDED_STAGES: [&str; 5] = ["split", "smote", "train", "fig6", "cluster"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRun {
    pub wall_clock_secs: f64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub stages: BTreeMap<String, StageRun>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn new(config_sha256: &str, seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_sha256.to_string(),
            seed,
            stage_seeds: SEEDED_STAGES
                .iter()
                .map(|s| (s.to_string(), stage_seed(seed, s)))
                .collect(),
            stages: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn path(out: &Path) -> PathBuf {
        out.join(MANIFEST_FILE)
    }

    pub fn read(out: &Path) -> anyhow::Result<Option<Self>> {
        let p = Self::path(out);
        if !p.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?))
    }

    /// Loads the manifest for this config and seed, starting afresh when
    /// either changed since it was written.
    pub fn open(out: &Path, config_sha256: &str, seed: u64) -> anyhow::Result<Self> {
        Ok(match Self::read(out)? {
            Some(m) if m.config_sha256 == config_sha256 && m.seed == seed => m,
            _ => Self::new(config_sha256, seed),
        })
    }

    /// Records a finished stage and rescans the artifact list from disk.
    pub fn finish_stage(&mut self, out: &Path, stage: &str, wall_clock_secs: f64) -> anyhow::Result<()> {
        let finished_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.stages.insert(
            stage.to_string(),
            StageRun {
                wall_clock_secs,
                finished_unix,
            },
        );
        self.artifacts = scan_artifacts(out)?;
        let p = Self::path(out);
        std::fs::write(&p, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", p.display()))
    }
}

/// Every file below `out` except the manifest, sorted by path.
pub fn scan_artifacts(out: &Path) -> anyhow::Result<Vec<Artifact>> {
    let mut files = Vec::new();
    collect(out, out, &mut files)?;
    files.sort();
    files
        .into_iter()
        .filter(|rel| rel != MANIFEST_FILE)
        .map(|rel| {
            let bytes = std::fs::read(out.join(&rel)).with_context(|| format!("reading {rel}"))?;
            Ok(Artifact {
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
                path: rel,
            })
        })
        .collect()
}

fn collect(root: &Path, dir: &Path, files: &mut Vec<String>) -> anyhow::Result<()> {
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let entry = entry?;
        let path = entry.path();
        if entry.file_type()?.is_dir() {
            collect(root, &path, files)?;
        } else {
            let rel = path.strip_prefix(root).expect("entry lies under root");
            let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            files.push(parts.join("/"));
        }
    }
    Ok(())
}
