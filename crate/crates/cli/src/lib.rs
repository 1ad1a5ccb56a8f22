//! Library side of the `custvec` command-line tool.
//!
//! Each subcommand reads a JSON [`config::PipelineConfig`], loads whatever
//! earlier stages persisted under the output directory, and writes its own
//! artifacts plus an updated [`manifest::RunManifest`].

pub mod commands;
pub mod config;
pub mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;

use config::{stage_seed, LoadedConfig};
use manifest::RunManifest;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;

/// Bad configuration, flags or arguments. Maps to exit code 2.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

/// 2 for validation problems anywhere in the error chain, otherwise 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    use custvec_core::Error as E;
    let validation = err.chain().any(|e| {
        e.is::<ValidationError>()
            || matches!(
                e.downcast_ref::<E>(),
                Some(E::InvalidParameter(_) | E::Schema(_) | E::UnknownId(_))
            )
    });
    if validation {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Shared state of one subcommand invocation.
#[derive(Debug)]
pub struct Run {
    pub cfg: LoadedConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Run {
    pub fn new(config_path: &Path, seed: Option<u64>) -> anyhow::Result<Self> {
        let cfg = LoadedConfig::load(config_path)?;
        let seed = seed.unwrap_or(cfg.config.seed);
        let out = cfg.output_dir();
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self { cfg, seed, out })
    }

    pub fn seed_for(&self, stage: &str) -> u64 {
        stage_seed(self.seed, stage)
    }

    /// `out/<sub>`, created if needed.
    pub fn dir(&self, sub: &str) -> anyhow::Result<PathBuf> {
        let d = self.out.join(sub);
        std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        Ok(d)
    }

    /// Path of an artifact an earlier stage should have written.
    pub fn require(&self, rel: &str, producer: &str) -> anyhow::Result<PathBuf> {
        let p = self.out.join(rel);
        if !p.exists() {
            anyhow::bail!("{} is missing; run `custvec {producer}` first", p.display());
        }
        Ok(p)
    }

    pub fn finish(&self, stage: &str, started: Instant) -> anyhow::Result<()> {
        let mut m = RunManifest::open(&self.out, &self.cfg.sha256, self.seed)?;
        m.finish_stage(&self.out, stage, started.elapsed().as_secs_f64())
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
