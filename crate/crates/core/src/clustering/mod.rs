//! Segmentation of embedded vectors.
//!
//! Four methods share one [`ClusterConfig`] / [`ClusterModel`] pair:
//! modified k-means, a 1-D self-organizing map, a full-covariance Gaussian
//! mixture fitted by EM, and flat-kernel mean-shift. Points may have any
//! (shared) dimension; the pipeline feeds 3-D customer vectors.

mod gmm;
mod kmeans;
mod mean_shift;
mod som;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gmm::gmm_em;
pub use kmeans::{kmeans_modified, lloyd, restart_condition_fires};
pub use mean_shift::{estimate_bandwidth, mean_shift};
pub use som::som_cluster;

/// Diagonal load added to a covariance that is (nearly) singular.
pub const GMM_REG_COVAR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    KmeansModified,
    Som,
    Gmm,
    MeanShift,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 4] = [
        ClusterMethod::KmeansModified,
        ClusterMethod::Som,
        ClusterMethod::Gmm,
        ClusterMethod::MeanShift,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClusterMethod::KmeansModified => "kmeans_modified",
            ClusterMethod::Som => "som",
            ClusterMethod::Gmm => "gmm",
            ClusterMethod::MeanShift => "mean_shift",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown clustering method `{s}`")))
    }

    /// Whether `k` is an input (true) or discovered (mean-shift).
    pub fn takes_k(&self) -> bool {
        !matches!(self, ClusterMethod::MeanShift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub method: ClusterMethod,
    /// Ignored by mean-shift.
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Mean-shift window radius; 0 selects it from the data.
    pub bandwidth: f64,
    /// Modified k-means only.
    pub max_restarts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            method: ClusterMethod::KmeansModified,
            k: 3,
            seed: 0,
            max_iter: 300,
            tol: 1e-6,
            bandwidth: 0.0,
            max_restarts: 20,
        }
    }
}

impl ClusterConfig {
    pub fn new(method: ClusterMethod, k: usize, seed: u64) -> Self {
        Self {
            method,
            k,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.takes_k() && self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.bandwidth >= 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::invalid("bandwidth must be >= 0 (0 = automatic)"));
        }
        if self.method == ClusterMethod::KmeansModified && self.max_restarts == 0 {
            return Err(Error::invalid("max_restarts must be at least 1"));
        }
        Ok(())
    }
}

/// A fitted partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub method: ClusterMethod,
    /// Centroids, SOM nodes, mixture means, or mean-shift modes.
    pub centers: Vec<Vec<f64>>,
    /// Row-major `d x d` covariance per component (GMM only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariances: Option<Vec<Vec<f64>>>,
    /// Mixing weights (GMM only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Cluster index per input point, in input order.
    pub assignments: Vec<usize>,
    pub sse: f64,
    pub iterations_used: usize,
    /// Center re-draws performed by modified k-means.
    #[serde(default)]
    pub restarts: usize,
    /// Total log-likelihood after each EM iteration (GMM only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_likelihood: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub(crate) fn simple(
        method: ClusterMethod,
        points: &[Vec<f64>],
        centers: Vec<Vec<f64>>,
        assignments: Vec<usize>,
        iterations_used: usize,
    ) -> Result<Self> {
        let sse = sse(points, &centers, &assignments)?;
        Ok(Self {
            method,
            centers,
            covariances: None,
            weights: None,
            assignments,
            sse,
            iterations_used,
            restarts: 0,
            log_likelihood: Vec::new(),
        })
    }
}

/// Dispatches on `config.method`.
pub fn fit(points: &[Vec<f64>], config: &ClusterConfig) -> Result<ClusterModel> {
    match config.method {
        ClusterMethod::KmeansModified => kmeans_modified(points, config),
        ClusterMethod::Som => som_cluster(points, config),
        ClusterMethod::Gmm => gmm_em(points, config),
        ClusterMethod::MeanShift => mean_shift(points, config),
    }
}

/// `Σ ‖xᵢ − c_{a(i)}‖²`
pub fn sse(points: &[Vec<f64>], centers: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    if points.len() != assignments.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: assignments.len(),
        });
    }
    let mut total = 0.0;
    for (p, &a) in points.iter().zip(assignments) {
        let c = centers
            .get(a)
            .ok_or_else(|| Error::invalid(format!("assignment {a} out of range for {} centers", centers.len())))?;
        if c.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                actual: c.len(),
            });
        }
        total += sq_dist(p, c);
    }
    Ok(total)
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Index of the closest center; ties go to the lower index.
pub(crate) fn nearest(p: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

pub(crate) fn assign_all(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centers)).collect()
}

pub(crate) fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let d = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::InsufficientData("no points to cluster".into()))?;
    if d == 0 {
        return Err(Error::invalid("points must have at least one coordinate"));
    }
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("points must be finite"));
        }
    }
    Ok(d)
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Permutation that sorts points lexicographically (stable).
pub(crate) fn canonical_order(points: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    idx
}

/// Indices of the first occurrence of each distinct point.
pub(crate) fn distinct_indices(points: &[Vec<f64>]) -> Vec<usize> {
    let order = canonical_order(points);
    let mut reps: Vec<usize> = Vec::new();
    for &i in &order {
        match reps.last() {
            Some(&j) if lex_cmp(&points[i], &points[j]).is_eq() => {}
            _ => reps.push(i),
        }
    }
    reps.sort_unstable();
    reps
}

/// Runs `f` on lexicographically sorted points and maps assignments back.
pub(crate) fn with_canonical_order(
    points: &[Vec<f64>],
    f: impl FnOnce(&[Vec<f64>]) -> Result<ClusterModel>,
) -> Result<ClusterModel> {
    let order = canonical_order(points);
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
    let mut model = f(&sorted)?;
    let mut assignments = vec![0; points.len()];
    for (pos, &orig) in order.iter().enumerate() {
        assignments[orig] = model.assignments[pos];
    }
    model.assignments = assignments;
    model.sse = sse(points, &model.centers, &model.assignments)?;
    Ok(model)
}

/// Moves empty clusters onto the point farthest from its current center.
pub(crate) fn reseed_empty(points: &[Vec<f64>], centers: &mut [Vec<f64>], assignments: &mut [usize]) {
    let k = centers.len();
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(&points[a], &centers[assignments[a]])
                    .total_cmp(&sq_dist(&points[b], &centers[assignments[b]]))
                    .then(b.cmp(&a))
            });
        let Some(far) = far else {
            return;
        };
        centers[empty] = points[far].clone();
        assignments[far] = empty;
    }
}

/// Per-cluster means; clusters without points keep their previous center.
pub(crate) fn means(points: &[Vec<f64>], assignments: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, c), prev)| {
            if c == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sse_examples() {
        let pts = vec![vec![1.0], vec![2.0]];
        assert_eq!(sse(&pts, &[vec![1.0], vec![2.0]], &[0, 1]).unwrap(), 0.0);
        assert_eq!(sse(&[vec![3.0]], &[vec![1.0]], &[0]).unwrap(), 4.0);
        assert_eq!(sse(&[vec![0.0], vec![1.0]], &[vec![0.5]], &[0, 0]).unwrap(), 0.5);
        assert!(sse(&pts, &[vec![0.0]], &[0, 1]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in ClusterMethod::ALL {
            assert_eq!(ClusterMethod::parse(m.name()).unwrap(), m);
        }
        assert!(ClusterMethod::parse("dbscan").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ClusterConfig { k: 0, ..Default::default() }.validate().is_err());
        assert!(ClusterConfig { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(ClusterConfig { max_restarts: 0, ..Default::default() }.validate().is_err());
        let ms = ClusterConfig { method: ClusterMethod::MeanShift, k: 0, ..Default::default() };
        assert!(ms.validate().is_ok());
    }

    #[test]
    fn distinct_indices_skip_duplicates() {
        let pts = vec![vec![1.0], vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(distinct_indices(&pts), vec![0, 1, 3]);
    }
}
