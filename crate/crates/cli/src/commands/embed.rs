use std::time::Instant;

use custvec_core::embedding::{compress_30_to_3, embed_all, WIDE_DIM};
use custvec_core::{EmbeddingMode, EmbeddingSet};
use serde::{Deserialize, Serialize};

use super::train::MODEL_FILE;
use super::{load_prepared, ModelFile, SCALER_FILE};
use crate::config::{sha256_hex, SplitName};
use crate::{write_json, write_text, Run, ValidationError};

pub const VECTORS_FILE: &str = "vectors/vectors.csv";
pub const VECTORS_META_FILE: &str = "vectors/meta.json";

#[derive(Debug, Clone, Default)]
pub struct EmbedArgs {
    pub split: Option<SplitName>,
    pub mode: Option<EmbeddingMode>,
    pub fig6: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorsMeta {
    pub split: SplitName,
    pub mode: EmbeddingMode,
    pub fig6: bool,
    pub rows: usize,
    pub dim: usize,
    pub model_sha256: String,
}

pub fn embed(run: &Run, args: &EmbedArgs) -> anyhow::Result<EmbeddingSet> {
    let started = Instant::now();
    let e = &run.cfg.config.embedding;
    let model_bytes = std::fs::read(run.require(MODEL_FILE, "train")?)?;
    let model: ModelFile = serde_json::from_slice(&model_bytes)?;
    let scaler_bytes = std::fs::read(run.require(SCALER_FILE, "prepare")?)?;
    anyhow::ensure!(
        sha256_hex(&scaler_bytes) == model.scaler_sha256,
        "{SCALER_FILE} does not match the scaler the model was trained with; rerun `custvec train`"
    );

    let split = args.split.unwrap_or(e.split);
    let mode = args.mode.unwrap_or(e.mode);
    let fig6 = args.fig6 || e.fig6;
    if fig6 && model.spec.hidden1_dim != WIDE_DIM {
        return Err(ValidationError(format!(
            "--fig6 needs a model with a {WIDE_DIM}-unit embedding layer (found {}); train with --fig6",
            model.spec.hidden1_dim
        ))
        .into());
    }

    let data = load_prepared(run, split)?;
    let mut set = embed_all(&model.params, &model.spec, &data, mode)?;
    if fig6 {
        set = compress_30_to_3(&set, run.seed_for("fig6"))?;
    }

    run.dir("vectors")?;
    write_text(&run.out.join(VECTORS_FILE), &set.to_csv())?;
    write_json(
        &run.out.join(VECTORS_META_FILE),
        &VectorsMeta {
            split,
            mode,
            fig6,
            rows: set.len(),
            dim: set.dim(),
            model_sha256: sha256_hex(&model_bytes),
        },
    )?;
    run.finish("embed", started)?;
    Ok(set)
}

/// Reads `vectors/vectors.csv`.
pub fn load_vectors(run: &Run) -> anyhow::Result<EmbeddingSet> {
    let p = run.require(VECTORS_FILE, "embed")?;
    let text = std::fs::read_to_string(&p)?;
    EmbeddingSet::from_csv(&text).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
}
