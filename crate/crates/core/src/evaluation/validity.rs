use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterModel, ClusterMethod};
use crate::error::{Error, Result};

/// Stand-in for an unbounded index (zero within-cluster scatter, or two
/// coincident centroids).
pub const DEGENERATE_SENTINEL: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterValidityReport {
    pub method: ClusterMethod,
    pub k: usize,
    pub sse: f64,
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
    /// Indices that hit [`DEGENERATE_SENTINEL`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

/// Relabels clusters to `0..k` in order of first appearance.
fn compact(assignments: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let labels = assignments
        .iter()
        .map(|a| {
            let next = map.len();
            *map.entry(*a).or_insert(next)
        })
        .collect();
    (labels, map.len())
}

fn check(points: &[Vec<f64>], assignments: &[usize]) -> Result<(Vec<usize>, usize)> {
    if points.len() != assignments.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: assignments.len(),
        });
    }
    let (labels, k) = compact(assignments);
    if k < 2 {
        return Err(Error::invalid("validity indices need at least two clusters"));
    }
    if let Some(p) = points.iter().find(|p| p.len() != points[0].len()) {
        return Err(Error::DimensionMismatch {
            expected: points[0].len(),
            actual: p.len(),
        });
    }
    Ok((labels, k))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let d = points[0].len();
    let mut c = vec![vec![0.0; d]; k];
    let mut n = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        n[l] += 1;
        for (s, x) in c[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (ci, &ni) in c.iter_mut().zip(&n) {
        ci.iter_mut().for_each(|s| *s /= ni as f64);
    }
    (c, n)
}

/// Mean silhouette with Euclidean distance. Points in singleton clusters score 0.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    let (labels, k) = check(points, assignments)?;
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let scores: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[labels[j]] += dist(&points[i], p);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / points.len() as f64)
}

/// Between-cluster over within-cluster dispersion, each divided by its
/// degrees of freedom. Returns [`DEGENERATE_SENTINEL`] when every point sits
/// on its centroid.
pub fn calinski_harabasz(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    let (labels, k) = check(points, assignments)?;
    let n = points.len();
    if k >= n {
        return Err(Error::invalid(format!("calinski_harabasz needs k < n (k = {k}, n = {n})")));
    }
    let (c, sizes) = centroids(points, &labels, k);
    let d = points[0].len();
    let overall: Vec<f64> = (0..d).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
    let ssb: f64 = c
        .iter()
        .zip(&sizes)
        .map(|(ci, &ni)| ni as f64 * dist(ci, &overall).powi(2))
        .sum();
    let ssw: f64 = points.iter().zip(&labels).map(|(p, &l)| dist(p, &c[l]).powi(2)).sum();
    if ssw == 0.0 {
        return Ok(DEGENERATE_SENTINEL);
    }
    Ok((ssb / (k - 1) as f64) / (ssw / (n - k) as f64))
}

/// Mean over clusters of the worst `(s_i + s_j) / d_ij`. Returns
/// [`DEGENERATE_SENTINEL`] when two centroids coincide.
pub fn davies_bouldin(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    let (labels, k) = check(points, assignments)?;
    let (c, sizes) = centroids(points, &labels, k);
    let mut scatter = vec![0.0; k];
    for (p, &l) in points.iter().zip(&labels) {
        scatter[l] += dist(p, &c[l]);
    }
    scatter.iter_mut().zip(&sizes).for_each(|(s, &n)| *s /= n as f64);
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let dij = dist(&c[i], &c[j]);
            if dij == 0.0 {
                return Ok(DEGENERATE_SENTINEL);
            }
            worst = worst.max((scatter[i] + scatter[j]) / dij);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

pub fn evaluate_clustering(points: &[Vec<f64>], model: &ClusterModel) -> Result<ClusterValidityReport> {
    if model.k() < 2 {
        return Err(Error::invalid(format!(
            "{} produced {} cluster(s); validity indices need at least two",
            model.method.name(),
            model.k()
        )));
    }
    let silhouette = silhouette(points, &model.assignments)?;
    let calinski_harabasz = calinski_harabasz(points, &model.assignments)?;
    let davies_bouldin = davies_bouldin(points, &model.assignments)?;
    let mut degenerate = Vec::new();
    if calinski_harabasz == DEGENERATE_SENTINEL {
        degenerate.push("calinski_harabasz".to_string());
    }
    if davies_bouldin == DEGENERATE_SENTINEL {
        degenerate.push("davies_bouldin".to_string());
    }
    Ok(ClusterValidityReport {
        method: model.method,
        k: model.k(),
        sse: model.sse,
        silhouette,
        calinski_harabasz,
        davies_bouldin,
        degenerate,
    })
}
