//! Mini-batch training with Adam and validation-loss early stopping.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::propagation::{batch_gradients, bce, forward_unchecked};
use super::{adam_step, init_params, AdamConfig, AdamState, LayerSpec, NetworkParams};
use crate::dataset::{CustomerRecord, Dataset, SplitSet};
use crate::error::{Error, Result};

/// A validation loss must drop by at least this much to reset patience.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    /// Epochs without improvement tolerated before stopping.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 50,
            optimizer: AdamConfig::default(),
            early_stop_patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch_size must be at least 1"));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    /// Last epoch run (1-based).
    pub stopped_epoch: usize,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
    pub best_params: NetworkParams,
}

impl TrainReport {
    pub fn best_val_loss(&self) -> f64 {
        self.history[self.best_epoch - 1].val_loss
    }

    /// `epoch,train_loss,train_acc,val_loss,val_acc`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for e in &self.history {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
            );
        }
        out
    }
}

struct Labeled<'a> {
    xs: Vec<&'a [f64]>,
    ys: Vec<u8>,
}

fn labeled<'a>(data: &'a Dataset, spec: &LayerSpec, what: &str) -> Result<Labeled<'a>> {
    if data.is_empty() {
        return Err(Error::InsufficientData(format!("{what} split is empty")));
    }
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    if data.n_features() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            actual: data.n_features(),
        });
    }
    // Row order is canonicalized by id so the epoch shuffle, not the
    // incoming order, decides the batch sequence.
    let mut rows: Vec<&CustomerRecord> = data.records().iter().collect();
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let ys = rows
        .iter()
        .map(|r| r.label.ok_or(Error::Unlabeled))
        .collect::<Result<Vec<_>>>()?;
    Ok(Labeled {
        xs: rows.iter().map(|r| r.features.as_slice()).collect(),
        ys,
    })
}

fn evaluate(params: &NetworkParams, spec: &LayerSpec, set: &Labeled<'_>) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, &y) in set.xs.iter().zip(&set.ys) {
        let p = forward_unchecked(params, spec, x).w3;
        loss += bce(p, y);
        if u8::from(p >= 0.5) == y {
            correct += 1;
        }
    }
    let n = set.xs.len() as f64;
    (loss / n, correct as f64 / n)
}

/// Mean loss and accuracy (threshold 0.5) of `params` on a labeled, standardized dataset.
pub fn evaluate_loss(params: &NetworkParams, spec: &LayerSpec, data: &Dataset) -> Result<(f64, f64)> {
    params.check_shape(spec)?;
    let set = labeled(data, spec, "evaluation")?;
    Ok(evaluate(params, spec, &set))
}

/// Trains from a seeded initialization.
///
/// After every epoch the validation loss is recorded. Training stops once
/// `early_stop_patience` consecutive epochs (at least one) fail to lower the
/// best validation loss by [`MIN_IMPROVEMENT`]; the parameters with the lowest
/// recorded validation loss are returned.
pub fn train(data: &SplitSet, spec: &LayerSpec, config: &TrainConfig) -> Result<TrainReport> {
    let init = init_params(spec, config.seed)?;
    train_from(data, spec, config, init)
}

/// [`train`] starting from given parameters.
pub fn train_from(
    data: &SplitSet,
    spec: &LayerSpec,
    config: &TrainConfig,
    init: NetworkParams,
) -> Result<TrainReport> {
    spec.validate()?;
    config.validate()?;
    init.check_shape(spec)?;
    let train_set = labeled(&data.train, spec, "train")?;
    let val_set = labeled(&data.validation, spec, "validation")?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut params = init;
    let mut adam = AdamState::new();
    let mut order: Vec<usize> = (0..train_set.xs.len()).collect();
    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0usize;
    let patience = config.early_stop_patience.max(1);

    let mut xs: Vec<&[f64]> = Vec::with_capacity(config.batch_size);
    let mut ys: Vec<u8> = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            xs.clear();
            ys.clear();
            for &i in batch {
                xs.push(train_set.xs[i]);
                ys.push(train_set.ys[i]);
            }
            for (x, &y) in xs.iter().zip(&ys) {
                let p = forward_unchecked(&params, spec, x).w3;
                if u8::from(p >= 0.5) == y {
                    correct += 1;
                }
            }
            let (grads, batch_loss) = batch_gradients(&params, spec, &xs, &ys)?;
            if !batch_loss.is_finite() || !grads.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += batch_loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut adam, &config.optimizer)?;
        }
        let n = order.len() as f64;
        let (val_loss, val_acc) = evaluate(&params, spec, &val_set);
        if !val_loss.is_finite() || !params.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / n,
            train_acc: correct as f64 / n,
            val_loss,
            val_acc,
        });

        let improved = val_loss < best_loss - MIN_IMPROVEMENT;
        if val_loss < best_loss {
            best_loss = val_loss;
            best_params = params.clone();
            best_epoch = epoch;
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= patience {
                break;
            }
        }
    }
    Ok(TrainReport {
        stopped_epoch: history.len(),
        best_epoch,
        history,
        best_params,
    })
}
