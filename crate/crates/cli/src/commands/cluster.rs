use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::time::Instant;

use custvec_core::clustering::{self, ClusterMethod, ClusterModel};
use custvec_core::evaluation::{evaluate_clustering, knee_select_k};
use custvec_core::{EmbeddingSet, KneeResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::load_vectors;
use super::load_prepared;
use crate::config::SplitName;
use crate::{write_json, write_text, Run, ValidationError};

pub const COMPARISON_CSV: &str = "clusters/comparison.csv";
pub const COMPARISON_TXT: &str = "clusters/comparison.txt";
pub const SUMMARY_FILE: &str = "clusters/summary.json";

#[derive(Debug, Clone, Default)]
pub struct ClusterArgs {
    pub methods: Option<Vec<ClusterMethod>>,
    pub ks: Option<Vec<usize>>,
    /// Restrict the vectors to the customers of one prepared split.
    pub split: Option<SplitName>,
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: ClusterMethod,
    /// Requested k; for mean-shift, the number of modes found.
    pub k: usize,
    pub clusters: usize,
    pub sse: Option<f64>,
    pub silhouette: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub iterations: usize,
    pub restarts: usize,
    /// Why an index or the whole run is missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub rows: usize,
    pub runs: Vec<ComparisonRow>,
    /// Knee of the SSE-vs-k curve per method with at least three ks.
    pub knee: BTreeMap<String, KneeResult>,
    /// k with the highest silhouette per method.
    pub best_silhouette_k: BTreeMap<String, usize>,
    pub mean_shift_k: Option<usize>,
}

fn run_file(method: ClusterMethod, k: usize) -> String {
    if method.takes_k() {
        format!("clusters/{}_k{k}", method.name())
    } else {
        format!("clusters/{}", method.name())
    }
}

fn assignments_csv(set: &EmbeddingSet, model: &ClusterModel) -> String {
    let mut out = String::from("id");
    for j in 1..=set.dim() {
        let _ = write!(out, ",v{j}");
    }
    out.push_str(",cluster\n");
    for (c, a) in set.vectors().iter().zip(&model.assignments) {
        out.push_str(c.id.as_str());
        for x in &c.v {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{a}");
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn table(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<16} {:>3} {:>8} {:>14} {:>10} {:>14} {:>10}\n",
        "method", "k", "clusters", "sse", "silhouette", "calinski", "davies"
    );
    let f = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "-".into());
    for r in rows {
        let _ = writeln!(
            out,
            "{:<16} {:>3} {:>8} {:>14} {:>10} {:>14} {:>10}",
            r.method.name(),
            r.k,
            r.clusters,
            f(r.sse, 4),
            f(r.silhouette, 4),
            f(r.calinski_harabasz, 2),
            f(r.davies_bouldin, 4),
        );
    }
    out
}

pub fn cluster(run: &Run, args: &ClusterArgs) -> anyhow::Result<ClusterSummary> {
    let started = Instant::now();
    let c = &run.cfg.config.clustering;
    let methods = args.methods.clone().unwrap_or_else(|| c.methods.clone());
    let ks = args.ks.clone().unwrap_or_else(|| c.ks.clone());
    if methods.is_empty() || ks.is_empty() || ks.contains(&0) {
        return Err(ValidationError("need at least one method and positive ks".into()).into());
    }

    let mut set = load_vectors(run)?;
    if let Some(split) = args.split.filter(|s| *s != SplitName::All) {
        let data = load_prepared(run, split)?;
        let keep: HashSet<&str> = data.records().iter().map(|r| r.id.as_str()).collect();
        let vectors = set
            .vectors()
            .iter()
            .filter(|v| keep.contains(v.id.as_str()))
            .cloned()
            .collect();
        set = EmbeddingSet::new(vectors)?;
    }
    let points = set.points();

    let mut jobs: Vec<(ClusterMethod, usize)> = Vec::new();
    for &m in &methods {
        if m.takes_k() {
            let mut sorted = ks.clone();
            sorted.sort_unstable();
            sorted.dedup();
            jobs.extend(sorted.into_iter().map(|k| (m, k)));
        } else if !jobs.contains(&(m, 0)) {
            jobs.push((m, 0));
        }
    }

    let seed = run.seed_for("cluster");
    let results: Vec<(ComparisonRow, Option<ClusterModel>)> = jobs
        .par_iter()
        .map(|&(method, k)| {
            let cfg = c.cluster_config(method, k.max(1), seed);
            match clustering::fit(&points, &cfg) {
                Ok(model) => {
                    let found = model.k();
                    let mut row = ComparisonRow {
                        method,
                        k: if method.takes_k() { k } else { found },
                        clusters: found,
                        sse: Some(model.sse),
                        silhouette: None,
                        calinski_harabasz: None,
                        davies_bouldin: None,
                        iterations: model.iterations_used,
                        restarts: model.restarts,
                        note: None,
                    };
                    match evaluate_clustering(&points, &model) {
                        Ok(v) => {
                            row.silhouette = Some(v.silhouette);
                            row.calinski_harabasz = Some(v.calinski_harabasz);
                            row.davies_bouldin = Some(v.davies_bouldin);
                            if !v.degenerate.is_empty() {
                                row.note = Some(format!("degenerate: {}", v.degenerate.join(", ")));
                            }
                        }
                        Err(e) => row.note = Some(e.to_string()),
                    }
                    (row, Some(model))
                }
                Err(e) => (
                    ComparisonRow {
                        method,
                        k,
                        clusters: 0,
                        sse: None,
                        silhouette: None,
                        calinski_harabasz: None,
                        davies_bouldin: None,
                        iterations: 0,
                        restarts: 0,
                        note: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    run.dir("clusters")?;
    let mut csv = String::from(
        "method,k,clusters,sse,silhouette,calinski_harabasz,davies_bouldin,iterations,restarts,note\n",
    );
    for ((method, k), (row, model)) in jobs.iter().zip(&results) {
        if let Some(model) = model {
            let base = run_file(*method, *k);
            write_text(&run.out.join(format!("{base}.csv")), &assignments_csv(&set, model))?;
            write_json(&run.out.join(format!("{base}.json")), model)?;
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            row.method.name(),
            row.k,
            row.clusters,
            opt(row.sse),
            opt(row.silhouette),
            opt(row.calinski_harabasz),
            opt(row.davies_bouldin),
            row.iterations,
            row.restarts,
            row.note.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    let rows: Vec<ComparisonRow> = results.into_iter().map(|(r, _)| r).collect();
    write_text(&run.out.join(COMPARISON_CSV), &csv)?;
    write_text(&run.out.join(COMPARISON_TXT), &table(&rows))?;

    let mut knee = BTreeMap::new();
    let mut best_silhouette_k = BTreeMap::new();
    for &m in methods.iter().filter(|m| m.takes_k()) {
        let mine: Vec<&ComparisonRow> = rows.iter().filter(|r| r.method == m).collect();
        let curve: Vec<(usize, f64)> = mine.iter().filter_map(|r| r.sse.map(|s| (r.k, s))).collect();
        if curve.len() >= 3 {
            let (cks, sse): (Vec<usize>, Vec<f64>) = curve.into_iter().unzip();
            if let Ok(kr) = knee_select_k(&cks, &sse) {
                knee.insert(m.name().to_string(), kr);
            }
        }
        let best = mine
            .iter()
            .filter_map(|r| r.silhouette.map(|s| (r.k, s)))
            .fold(None, |acc: Option<(usize, f64)>, (k, s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((k, s)),
            });
        if let Some((k, _)) = best {
            best_silhouette_k.insert(m.name().to_string(), k);
        }
    }
    let summary = ClusterSummary {
        rows: points.len(),
        mean_shift_k: rows
            .iter()
            .find(|r| r.method == ClusterMethod::MeanShift && r.sse.is_some())
            .map(|r| r.clusters),
        runs: rows,
        knee,
        best_silhouette_k,
    };
    write_json(&run.out.join(SUMMARY_FILE), &summary)?;
    run.finish("cluster", started)?;
    Ok(summary)
}
