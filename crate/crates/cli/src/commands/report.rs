use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use custvec_core::ClassificationReport;
use serde::{Deserialize, Serialize};

use super::cluster::{table, ClusterSummary, ComparisonRow, SUMMARY_FILE};
use super::embed::{VectorsMeta, VECTORS_META_FILE};
use super::train::{TrainMetrics, HISTORY_FILE, METRICS_FILE};
use super::PrepareSummary;
use crate::manifest::{scan_artifacts, RunManifest};
use crate::{read_json, write_json, write_text, Run};

pub const REPORT_JSON: &str = "report/report.json";
pub const REPORT_TXT: &str = "report/report.txt";
const PREPARE_SUMMARY: &str = "prepared/summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub activation: String,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub first_train_loss: f64,
    pub last_train_loss: f64,
    pub first_val_loss: f64,
    pub last_val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mse: f64,
    pub loss: f64,
}

impl From<&ClassificationReport> for MetricRow {
    fn from(r: &ClassificationReport) -> Self {
        Self {
            n: r.n,
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            mse: r.mse,
            loss: r.loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSection {
    pub present: bool,
    pub splits: BTreeMap<String, MetricRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSection {
    pub present: bool,
    pub rows: usize,
    pub runs: Vec<ComparisonRow>,
    pub knee_k: BTreeMap<String, usize>,
    pub best_silhouette_k: BTreeMap<String, usize>,
    pub mean_shift_k: Option<usize>,
}

/// `report/report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub data: Option<PrepareSummary>,
    pub training: Option<TrainingCurve>,
    pub classification: ClassificationSection,
    pub vectors: Option<VectorsMeta>,
    pub clustering: ClusteringSection,
    /// Artifacts present when the report was built.
    pub files: Vec<String>,
    /// Expected artifacts that were not found.
    pub missing: Vec<String>,
}

fn optional<T: serde::de::DeserializeOwned>(
    run: &Run,
    rel: &str,
    missing: &mut Vec<String>,
) -> anyhow::Result<Option<T>> {
    let p = run.out.join(rel);
    if p.exists() {
        Ok(Some(read_json(&p)?))
    } else {
        missing.push(rel.to_string());
        Ok(None)
    }
}

/// First and last `(train_loss, val_loss)` of `history.csv`.
fn loss_ends(text: &str) -> Option<((f64, f64), (f64, f64))> {
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some((f.get(1)?.parse().ok()?, f.get(3)?.parse().ok()?))
        })
        .collect();
    Some((*rows.first()?, *rows.last()?))
}

pub fn report(run: &Run) -> anyhow::Result<Report> {
    let started = Instant::now();
    let manifest = RunManifest::read(&run.out)?
        .ok_or_else(|| anyhow::anyhow!("{} has no manifest; run a pipeline stage first", run.out.display()))?;

    let mut missing = Vec::new();
    let data: Option<PrepareSummary> = optional(run, PREPARE_SUMMARY, &mut missing)?;
    let metrics: Option<TrainMetrics> = optional(run, METRICS_FILE, &mut missing)?;
    let vectors: Option<VectorsMeta> = optional(run, VECTORS_META_FILE, &mut missing)?;
    let clusters: Option<ClusterSummary> = optional(run, SUMMARY_FILE, &mut missing)?;

    let history = std::fs::read_to_string(run.out.join(HISTORY_FILE)).ok();
    if history.is_none() {
        missing.push(HISTORY_FILE.to_string());
    }
    let training = match (&metrics, history.as_deref().and_then(loss_ends)) {
        (Some(m), Some(((t0, v0), (t1, v1)))) => Some(TrainingCurve {
            activation: m.activation.clone(),
            epochs_run: m.epochs_run,
            best_epoch: m.best_epoch,
            best_val_loss: m.best_val_loss,
            first_train_loss: t0,
            last_train_loss: t1,
            first_val_loss: v0,
            last_val_loss: v1,
        }),
        _ => None,
    };
    let classification = ClassificationSection {
        present: metrics.is_some(),
        splits: metrics
            .iter()
            .flat_map(|m| [("validation", &m.validation), ("test", &m.test)])
            .map(|(n, r)| (n.to_string(), MetricRow::from(r)))
            .collect(),
    };
    let clustering = match clusters {
        Some(c) => ClusteringSection {
            present: true,
            rows: c.rows,
            knee_k: c.knee.iter().map(|(m, k)| (m.clone(), k.chosen_k)).collect(),
            runs: c.runs,
            best_silhouette_k: c.best_silhouette_k,
            mean_shift_k: c.mean_shift_k,
        },
        None => ClusteringSection {
            present: false,
            rows: 0,
            runs: Vec::new(),
            knee_k: BTreeMap::new(),
            best_silhouette_k: BTreeMap::new(),
            mean_shift_k: None,
        },
    };
    let files = scan_artifacts(&run.out)?
        .into_iter()
        .map(|a| a.path)
        .filter(|p| p != REPORT_JSON && p != REPORT_TXT)
        .collect();

    let report = Report {
        tool_version: manifest.tool_version,
        config_sha256: manifest.config_sha256,
        seed: manifest.seed,
        data,
        training,
        classification,
        vectors,
        clustering,
        files,
        missing,
    };
    run.dir("report")?;
    write_json(&run.out.join(REPORT_JSON), &report)?;
    write_text(&run.out.join(REPORT_TXT), &render(&report))?;
    run.finish("report", started)?;
    Ok(report)
}

pub fn render(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "custvec {} run report (seed {})", r.tool_version, r.seed);
    let _ = writeln!(out, "config sha256 {}\n", r.config_sha256);

    let _ = writeln!(out, "== data");
    match &r.data {
        Some(d) => {
            let _ = writeln!(
                out,
                "{} input rows, {} after filters, {} features, {} imputed cells",
                d.input_rows, d.filtered_rows, d.features, d.imputed_cells
            );
            for (name, s) in &d.splits {
                let _ = writeln!(out, "  {name:<10} {:>7} rows  {:>7} neg  {:>7} pos", s.rows, s.negatives, s.positives);
            }
            if d.smote.enabled {
                let _ = writeln!(out, "  smote added {} train rows", d.smote.synthetic_rows);
            }
        }
        None => out.push_str("absent\n"),
    }

    let _ = writeln!(out, "\n== training");
    match &r.training {
        Some(t) => {
            let _ = writeln!(
                out,
                "{} hidden activation, {} epochs run, best epoch {} (val loss {:.6})",
                t.activation, t.epochs_run, t.best_epoch, t.best_val_loss
            );
            let _ = writeln!(
                out,
                "train loss {:.6} -> {:.6}, val loss {:.6} -> {:.6}",
                t.first_train_loss, t.last_train_loss, t.first_val_loss, t.last_val_loss
            );
        }
        None => out.push_str("absent\n"),
    }

    let _ = writeln!(out, "\n== classification");
    if r.classification.present {
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "split", "n", "accuracy", "precision", "recall", "f1", "mse", "loss"
        );
        for (name, m) in &r.classification.splits {
            let _ = writeln!(
                out,
                "{name:<10} {:>7} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                m.n, m.accuracy, m.precision, m.recall, m.f1, m.mse, m.loss
            );
        }
    } else {
        out.push_str("absent\n");
    }

    let _ = writeln!(out, "\n== clustering");
    let c = &r.clustering;
    if c.present {
        let _ = writeln!(out, "{} vectors", c.rows);
        out.push_str(&table(&c.runs));
        for (m, k) in &c.knee_k {
            let _ = writeln!(out, "knee k for {m}: {k}");
        }
        for (m, k) in &c.best_silhouette_k {
            let _ = writeln!(out, "best silhouette k for {m}: {k}");
        }
        if let Some(k) = c.mean_shift_k {
            let _ = writeln!(out, "mean-shift modes: {k}");
        }
    } else {
        out.push_str("absent\n");
    }

    let _ = writeln!(out, "\n== files");
    for f in &r.files {
        let _ = writeln!(out, "{f}");
    }
    if !r.missing.is_empty() {
        let _ = writeln!(out, "\n== missing");
        for f in &r.missing {
            let _ = writeln!(out, "{f}");
        }
    }
    out
}
