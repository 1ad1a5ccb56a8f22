//! Self-organizing map on a 1 x k chain of nodes.
//!
//! Online phase: samples are visited in a fresh random order each pass, for
//! `max_iter` passes. At step `t` of `T = max_iter * n` the learning rate is
//! `0.5 exp(-t/T)` and the neighbourhood radius `(k/2) exp(-t/T)`; every node
//! moves toward the sample weighted by a Gaussian of its chain distance to
//! the best-matching unit.
//!
//! Convergence phase: with the neighbourhood shrunk to zero, nodes are moved
//! to the mean of the samples they win until the winners stop changing. This
//! settles the nodes exactly rather than leaving them wherever the decayed
//! learning rate happened to stop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    assign_all, check_points, means, nearest, reseed_empty, ClusterConfig, ClusterMethod, ClusterModel,
};
use crate::error::Result;

const INITIAL_LR: f64 = 0.5;

pub fn som_cluster(points: &[Vec<f64>], config: &ClusterConfig) -> Result<ClusterModel> {
    config.validate()?;
    check_points(points)?;
    let n = points.len();
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut nodes: Vec<Vec<f64>> = (0..k).map(|i| points[order[i % n]].clone()).collect();

    let total = (config.max_iter * n) as f64;
    let radius0 = k as f64 / 2.0;
    let mut t = 0usize;
    for _ in 0..config.max_iter {
        order.shuffle(&mut rng);
        for &i in &order {
            let decay = (-(t as f64) / total).exp();
            let lr = INITIAL_LR * decay;
            let radius = radius0 * decay;
            let x = &points[i];
            let bmu = nearest(x, &nodes);
            for (g, node) in nodes.iter_mut().enumerate() {
                let grid = g as f64 - bmu as f64;
                let h = (-(grid * grid) / (2.0 * radius * radius)).exp();
                if h == 0.0 {
                    continue;
                }
                for (w, xv) in node.iter_mut().zip(x) {
                    *w += lr * h * (xv - *w);
                }
            }
            t += 1;
        }
    }

    let mut assignments = assign_all(points, &nodes);
    reseed_empty(points, &mut nodes, &mut assignments);
    let mut iterations = config.max_iter;
    for _ in 0..config.max_iter {
        iterations += 1;
        nodes = means(points, &assignments, &nodes);
        let mut next = assign_all(points, &nodes);
        reseed_empty(points, &mut nodes, &mut next);
        let unchanged = next == assignments;
        assignments = next;
        if unchanged {
            break;
        }
    }
    ClusterModel::simple(ClusterMethod::Som, points, nodes, assignments, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::kmeans_modified;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn cfg(k: usize, seed: u64) -> ClusterConfig {
        ClusterConfig {
            max_iter: 20,
            ..ClusterConfig::new(ClusterMethod::Som, k, seed)
        }
    }

    fn two_blobs(seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.3).unwrap();
        (0..120)
            .map(|i| {
                let c = if i % 2 == 0 { -4.0 } else { 4.0 };
                (0..3).map(|_| c + noise.sample(&mut rng)).collect()
            })
            .collect()
    }

    #[test]
    fn single_node_sits_at_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let m = som_cluster(&pts, &cfg(1, 2)).unwrap();
        for j in 0..3 {
            let mean = pts.iter().map(|p| p[j]).sum::<f64>() / 50.0;
            assert!((m.centers[0][j] - mean).abs() < 1e-6);
        }
        assert!(m.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn matches_kmeans_on_separated_blobs() {
        let pts = two_blobs(3);
        let som = som_cluster(&pts, &cfg(2, 5)).unwrap();
        let km = kmeans_modified(&pts, &ClusterConfig::new(ClusterMethod::KmeansModified, 2, 5)).unwrap();
        let flip = som.assignments[0] != km.assignments[0];
        for (a, b) in som.assignments.iter().zip(&km.assignments) {
            assert_eq!(*a, if flip { 1 - b } else { *b });
        }
        assert!((som.sse - km.sse).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_nearest() {
        let pts = two_blobs(4);
        let a = som_cluster(&pts, &cfg(4, 9)).unwrap();
        assert_eq!(a, som_cluster(&pts, &cfg(4, 9)).unwrap());
        assert_eq!(assign_all(&pts, &a.centers), a.assignments);
        assert!(som_cluster(&[], &cfg(2, 0)).is_err());
    }
}
