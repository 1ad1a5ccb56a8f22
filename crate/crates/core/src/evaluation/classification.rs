use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{bce, predict_proba, LayerSpec, NetworkParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub r#fn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.r#fn
    }

    /// Names of the metrics whose denominator is zero and were reported as 0.
    pub fn degenerate_metrics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.total() == 0 {
            out.push("accuracy".to_string());
        }
        if self.tp + self.fp == 0 {
            out.push("precision".to_string());
        }
        if self.tp + self.r#fn == 0 {
            out.push("recall".to_string());
        }
        if precision(self) + recall(self) == 0.0 {
            out.push("f1".to_string());
        }
        out
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InsufficientData("no predictions to score".into()));
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t > 1 || p > 1 {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            _ => c.r#fn += 1,
        }
    }
    Ok(c)
}

pub fn accuracy(c: &ConfusionCounts) -> f64 {
    ratio(c.tp + c.tn, c.total())
}

/// 0 when nothing was predicted positive.
pub fn precision(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp)
}

/// 0 when there are no positives.
pub fn recall(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.r#fn)
}

/// 0 when precision and recall are both 0.
pub fn f1(c: &ConfusionCounts) -> f64 {
    let (p, r) = (precision(c), recall(c));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InsufficientData("no predictions to score".into()));
    }
    Ok(y_true.iter().zip(y_pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y_true.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub threshold: f64,
    pub accuracy: f64,
    /// Mean squared error between labels and predicted probabilities.
    pub mse: f64,
    /// Mean binary cross-entropy.
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionCounts,
    /// Metrics reported as 0 because their denominator vanished.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

impl ClassificationReport {
    pub fn from_probabilities(labels: &[u8], probs: &[f64], threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!("threshold {threshold} must lie in (0, 1)")));
        }
        let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= threshold)).collect();
        let c = confusion(labels, &preds)?;
        let targets: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
        let loss = labels.iter().zip(probs).map(|(&y, &p)| bce(p, y)).sum::<f64>() / labels.len() as f64;
        Ok(Self {
            n: labels.len(),
            threshold,
            accuracy: accuracy(&c),
            mse: mse(&targets, probs)?,
            loss,
            precision: precision(&c),
            recall: recall(&c),
            f1: f1(&c),
            degenerate: c.degenerate_metrics(),
            confusion: c,
        })
    }
}

/// Scores the network on every row of a labeled, standardized dataset.
pub fn evaluate_classifier(
    params: &NetworkParams,
    spec: &LayerSpec,
    data: &Dataset,
    threshold: f64,
) -> Result<ClassificationReport> {
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    let mut labels = Vec::with_capacity(data.len());
    let mut probs = Vec::with_capacity(data.len());
    for r in data.records() {
        labels.push(r.label.ok_or(Error::Unlabeled)?);
        probs.push(predict_proba(params, spec, &r.features)?);
    }
    ClassificationReport::from_probabilities(&labels, &probs, threshold)
}
