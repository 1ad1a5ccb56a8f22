//! Flat-kernel mean-shift.
//!
//! Every point climbs to a mode by repeatedly jumping to the mean of the
//! points within `bandwidth`. Modes are then merged greedily: candidates are
//! visited by decreasing window population (coordinates break ties) and a
//! mode is kept only if no kept mode lies within `bandwidth`. Each point
//! joins its nearest kept mode.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    assign_all, check_points, dist, lex_cmp, sq_dist, with_canonical_order, ClusterConfig, ClusterMethod,
    ClusterModel,
};
use crate::error::Result;

/// Points used for the automatic bandwidth.
pub const BANDWIDTH_SAMPLE: usize = 500;

/// Half the median pairwise distance of a seeded subsample of at most
/// [`BANDWIDTH_SAMPLE`] points. Falls back to 1 when every sampled point
/// coincides.
pub fn estimate_bandwidth(points: &[Vec<f64>], seed: u64) -> Result<f64> {
    check_points(points)?;
    let idx: Vec<usize> = if points.len() > BANDWIDTH_SAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = sample(&mut rng, points.len(), BANDWIDTH_SAMPLE).into_vec();
        s.sort_unstable();
        s
    } else {
        (0..points.len()).collect()
    };
    let mut d: Vec<f64> = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            d.push(dist(&points[i], &points[j]));
        }
    }
    if d.is_empty() {
        return Ok(1.0);
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    Ok(if median > 0.0 { median / 2.0 } else { 1.0 })
}

fn window_mean(points: &[Vec<f64>], y: &[f64], bw2: f64) -> Option<(Vec<f64>, usize)> {
    let mut sum = vec![0.0; y.len()];
    let mut count = 0usize;
    for p in points {
        if sq_dist(p, y) <= bw2 {
            count += 1;
            for (s, x) in sum.iter_mut().zip(p) {
                *s += x;
            }
        }
    }
    (count > 0).then(|| (sum.into_iter().map(|s| s / count as f64).collect(), count))
}

pub fn mean_shift(points: &[Vec<f64>], config: &ClusterConfig) -> Result<ClusterModel> {
    config.validate()?;
    check_points(points)?;
    with_canonical_order(points, |pts| {
        // Estimated on the sorted points so input order cannot matter.
        let bandwidth = if config.bandwidth > 0.0 {
            config.bandwidth
        } else {
            estimate_bandwidth(pts, config.seed)?
        };
        fit_sorted(pts, bandwidth, config)
    })
}

fn fit_sorted(points: &[Vec<f64>], bandwidth: f64, config: &ClusterConfig) -> Result<ClusterModel> {
    let bw2 = bandwidth * bandwidth;
    let climbed: Vec<(Vec<f64>, usize)> = points
        .par_iter()
        .map(|start| {
            let mut y = start.clone();
            let mut iters = 0;
            while iters < config.max_iter {
                iters += 1;
                // A start point always sees itself, so the window is never empty.
                let (next, _) = window_mean(points, &y, bw2).expect("non-empty window");
                let shift = dist(&next, &y);
                y = next;
                if shift < config.tol {
                    break;
                }
            }
            (y, iters)
        })
        .collect();
    let iterations = climbed.iter().map(|c| c.1).max().unwrap_or(0);

    let mut candidates: Vec<(Vec<f64>, usize)> = climbed
        .into_iter()
        .map(|(m, _)| {
            let pop = window_mean(points, &m, bw2).map_or(0, |w| w.1);
            (m, pop)
        })
        .collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| lex_cmp(&a.0, &b.0)));
    let mut modes: Vec<Vec<f64>> = Vec::new();
    for (m, _) in candidates {
        if modes.iter().all(|k| dist(k, &m) >= bandwidth) {
            modes.push(m);
        }
    }

    let mut assignments = assign_all(points, &modes);
    // Drop modes that won no points and renumber.
    let mut used = vec![false; modes.len()];
    assignments.iter().for_each(|&a| used[a] = true);
    if used.iter().any(|u| !u) {
        let mut remap = vec![usize::MAX; modes.len()];
        let mut kept = Vec::new();
        for (i, m) in modes.into_iter().enumerate() {
            if used[i] {
                remap[i] = kept.len();
                kept.push(m);
            }
        }
        modes = kept;
        assignments.iter_mut().for_each(|a| *a = remap[*a]);
    }
    ClusterModel::simple(ClusterMethod::MeanShift, points, modes, assignments, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn cfg(bandwidth: f64) -> ClusterConfig {
        ClusterConfig {
            bandwidth,
            ..ClusterConfig::new(ClusterMethod::MeanShift, 0, 1)
        }
    }

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x, 0.0, 0.0]).collect()
    }

    fn cloud(seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..120)
            .map(|i| {
                let c = [0.0, 5.0, 10.0][i % 3];
                (0..3).map(|_| c + rng.random_range(-1.0..1.0)).collect()
            })
            .collect()
    }

    #[test]
    fn two_groups_on_a_line() {
        let pts = line(&[0.0, 0.1, 0.2, 10.0, 10.1]);
        let m = mean_shift(&pts, &cfg(1.0)).unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(m.assignments[0], m.assignments[1]);
        assert_eq!(m.assignments[1], m.assignments[2]);
        assert_eq!(m.assignments[3], m.assignments[4]);
        assert_ne!(m.assignments[0], m.assignments[3]);
    }

    #[test]
    fn huge_bandwidth_gives_the_mean() {
        let pts = line(&[0.0, 0.1, 0.2, 10.0, 10.1]);
        let m = mean_shift(&pts, &cfg(100.0)).unwrap();
        assert_eq!(m.k(), 1);
        assert!((m.centers[0][0] - 20.4 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn auto_bandwidth_finds_three_groups() {
        let pts = cloud(2);
        let m = mean_shift(&pts, &cfg(0.0)).unwrap();
        assert_eq!(m.k(), 3);
        assert_eq!(assign_all(&pts, &m.centers), m.assignments);
    }

    #[test]
    fn mode_count_non_increasing_in_bandwidth() {
        let pts = cloud(3);
        let mut last = usize::MAX;
        for i in 1..=40 {
            let k = mean_shift(&pts, &cfg(0.25 * i as f64)).unwrap().k();
            assert!(k <= last, "bandwidth {} gave {k} > {last}", 0.25 * i as f64);
            last = k;
        }
        assert_eq!(last, 1);
    }

    #[test]
    fn permutation_equivariant() {
        let pts = cloud(4);
        let a = mean_shift(&pts, &cfg(2.0)).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let b = mean_shift(&shuffled, &cfg(2.0)).unwrap();
        for (pos, &i) in perm.iter().enumerate() {
            assert_eq!(b.assignments[pos], a.assignments[i]);
        }
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn bandwidth_estimate() {
        // Pairwise distances 1, 2, 3 -> median 2 -> bandwidth 1.
        let pts = line(&[0.0, 1.0, 3.0]);
        assert_eq!(estimate_bandwidth(&pts, 0).unwrap(), 1.0);
        assert_eq!(estimate_bandwidth(&line(&[2.0, 2.0]), 0).unwrap(), 1.0);
    }
}
