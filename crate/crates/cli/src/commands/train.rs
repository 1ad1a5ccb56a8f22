use std::time::Instant;

use anyhow::Context;
use custvec_core::embedding::WIDE_DIM;
use custvec_core::evaluation::evaluate_classifier;
use custvec_core::network::{self, ActivationKind, LayerSpec, NetworkParams};
use custvec_core::{ClassificationReport, SplitSet};
use serde::{Deserialize, Serialize};

use super::{load_prepared, SCALER_FILE};
use crate::config::{sha256_hex, SplitName};
use crate::{write_json, write_text, Run};

pub const MODEL_FILE: &str = "model/params.json";
pub const METRICS_FILE: &str = "model/metrics.json";
pub const HISTORY_FILE: &str = "model/history.csv";

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    /// Overrides `train.activation`.
    pub activation: Option<ActivationKind>,
    /// Train the 30-unit embedding layer used by `embed --fig6`.
    pub fig6: bool,
}

/// `model/params.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub spec: LayerSpec,
    pub params: NetworkParams,
    /// Hash of the `prepared/scaler.json` the model was trained against.
    pub scaler_sha256: String,
}

/// `model/metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub activation: String,
    pub hidden1: usize,
    pub hidden2: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub validation: ClassificationReport,
    pub test: ClassificationReport,
}

pub fn train(run: &Run, args: &TrainArgs) -> anyhow::Result<TrainMetrics> {
    let started = Instant::now();
    let t = &run.cfg.config.train;
    let data = SplitSet {
        train: load_prepared(run, SplitName::Train)?,
        validation: load_prepared(run, SplitName::Validation)?,
        test: load_prepared(run, SplitName::Test)?,
    };
    let activation = match args.activation {
        Some(a) => a,
        None => t.activation()?,
    };
    let hidden1 = if args.fig6 || run.cfg.config.embedding.fig6 {
        WIDE_DIM
    } else {
        t.hidden1
    };
    let mut spec = LayerSpec::new(data.train.n_features())
        .with_hidden(hidden1, t.hidden2)
        .with_activation(activation);
    spec.use_bias = t.use_bias;

    let report = network::train(&data, &spec, &t.train_config(run.seed_for("train")))
        .context("training failed")?;
    let params = report.best_params.clone();
    let metrics = TrainMetrics {
        activation: activation.name().to_string(),
        hidden1: spec.hidden1_dim,
        hidden2: spec.hidden2_dim,
        epochs_run: report.stopped_epoch,
        best_epoch: report.best_epoch,
        best_val_loss: report.best_val_loss(),
        validation: evaluate_classifier(&params, &spec, &data.validation, t.threshold)?,
        test: evaluate_classifier(&params, &spec, &data.test, t.threshold)?,
    };

    let scaler_bytes = std::fs::read(run.out.join(SCALER_FILE))?;
    run.dir("model")?;
    write_json(
        &run.out.join(MODEL_FILE),
        &ModelFile {
            spec,
            params,
            scaler_sha256: sha256_hex(&scaler_bytes),
        },
    )?;
    write_text(&run.out.join(HISTORY_FILE), &report.to_csv())?;
    write_json(&run.out.join(METRICS_FILE), &metrics)?;
    run.finish("train", started)?;
    Ok(metrics)
}
