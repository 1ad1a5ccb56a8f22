//! Modified k-means.
//!
//! Each attempt draws `k` distinct data points as centers and assigns every
//! point to its nearest center. If some point lies farther from its center
//! than that center lies from the nearest other center, the draw is rejected
//! and a fresh one is made. Otherwise Lloyd iterations run to a fixed point.
//!
//! Every one of the `max_restarts` draws is run to completion. The lowest-SSE
//! accepted run wins; if no draw passes the check, the lowest-SSE run overall
//! is returned.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    assign_all, check_points, distinct_indices, means, reseed_empty, sq_dist, ClusterConfig,
    ClusterMethod, ClusterModel,
};
use crate::error::{Error, Result};

/// True when some point is farther from its own center than that center is
/// from its nearest neighbouring center.
pub fn restart_condition_fires(points: &[Vec<f64>], centers: &[Vec<f64>], assignments: &[usize]) -> bool {
    let k = centers.len();
    if k < 2 {
        return false;
    }
    let gap: Vec<f64> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| sq_dist(&centers[i], &centers[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    points
        .iter()
        .zip(assignments)
        .any(|(p, &a)| sq_dist(p, &centers[a]) > gap[a])
}

/// Lloyd iterations from the given centers until assignments stop changing,
/// centers move less than `tol`, or `max_iter` updates have run.
///
/// Returns `(centers, assignments, iterations)`.
pub fn lloyd(
    points: &[Vec<f64>],
    mut centers: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> (Vec<Vec<f64>>, Vec<usize>, usize) {
    let mut assignments = assign_all(points, &centers);
    reseed_empty(points, &mut centers, &mut assignments);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let updated = means(points, &assignments, &centers);
        let shift = updated
            .iter()
            .zip(&centers)
            .map(|(a, b)| sq_dist(a, b))
            .fold(0.0, f64::max)
            .sqrt();
        centers = updated;
        let mut next = assign_all(points, &centers);
        reseed_empty(points, &mut centers, &mut next);
        let unchanged = next == assignments;
        assignments = next;
        if unchanged || shift < tol {
            break;
        }
    }
    (centers, assignments, iterations)
}

struct Run {
    centers: Vec<Vec<f64>>,
    assignments: Vec<usize>,
    iterations: usize,
    sse: f64,
}

pub fn kmeans_modified(points: &[Vec<f64>], config: &ClusterConfig) -> Result<ClusterModel> {
    config.validate()?;
    check_points(points)?;
    let k = config.k;
    let distinct = distinct_indices(points);
    if k > distinct.len() {
        return Err(Error::InsufficientData(format!(
            "k = {k} exceeds the {} distinct points",
            distinct.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut accepted: Option<Run> = None;
    let mut fallback: Option<Run> = None;
    let mut restarts = 0;
    for attempt in 0..config.max_restarts {
        let centers: Vec<Vec<f64>> = sample(&mut rng, distinct.len(), k)
            .into_iter()
            .map(|i| points[distinct[i]].clone())
            .collect();
        let initial = assign_all(points, &centers);
        let passed = !restart_condition_fires(points, &centers, &initial);
        if !passed && attempt + 1 < config.max_restarts {
            restarts += 1;
        }
        let (centers, assignments, iterations) = lloyd(points, centers, config.max_iter, config.tol);
        let sse = super::sse(points, &centers, &assignments)?;
        let run = Run {
            centers,
            assignments,
            iterations,
            sse,
        };
        let slot = if passed { &mut accepted } else { &mut fallback };
        if slot.as_ref().map_or(true, |b| run.sse < b.sse) {
            *slot = Some(run);
        }
    }
    let best = accepted.or(fallback).expect("max_restarts >= 1");
    let mut model = ClusterModel::simple(
        ClusterMethod::KmeansModified,
        points,
        best.centers,
        best.assignments,
        best.iterations,
    )?;
    model.restarts = restarts;
    Ok(model)
}
