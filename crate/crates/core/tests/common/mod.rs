//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's algorithms; each function is a
//! direct transcription of the textbook definition.

#![allow(dead_code)]

use custvec_core::network::{forward, ActivationKind, LayerSpec, NetworkParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn groups(assignments: &[usize]) -> Vec<Vec<usize>> {
    let mut labels: Vec<usize> = assignments.to_vec();
    labels.sort_unstable();
    labels.dedup();
    labels
        .iter()
        .map(|l| (0..assignments.len()).filter(|&i| assignments[i] == *l).collect())
        .collect()
}

fn centroid(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let d = points[0].len();
    (0..d)
        .map(|j| members.iter().map(|&i| points[i][j]).sum::<f64>() / members.len() as f64)
        .collect()
}

/// Minimum SSE over every assignment of the points to exactly `k` non-empty clusters.
pub fn brute_force_sse(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let g = groups(&labels);
        if g.len() == k {
            let total: f64 = g
                .iter()
                .map(|m| {
                    let c = centroid(points, m);
                    m.iter().map(|&i| dist(&points[i], &c).powi(2)).sum::<f64>()
                })
                .sum();
            best = best.min(total);
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

pub fn naive_silhouette(points: &[Vec<f64>], assignments: &[usize]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n).filter(|&j| j != i && assignments[j] == assignments[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for g in groups(assignments) {
            if assignments[g[0]] == assignments[i] {
                continue;
            }
            let m = g.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>() / g.len() as f64;
            b = b.min(m);
        }
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

pub fn naive_calinski_harabasz(points: &[Vec<f64>], assignments: &[usize]) -> f64 {
    let n = points.len();
    let all: Vec<usize> = (0..n).collect();
    let mean = centroid(points, &all);
    let g = groups(assignments);
    let k = g.len();
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for m in &g {
        let c = centroid(points, m);
        ssb += m.len() as f64 * dist(&c, &mean).powi(2);
        for &i in m {
            ssw += dist(&points[i], &c).powi(2);
        }
    }
    if ssw == 0.0 {
        return 1e12;
    }
    (ssb / (k - 1) as f64) / (ssw / (n - k) as f64)
}

pub fn naive_davies_bouldin(points: &[Vec<f64>], assignments: &[usize]) -> f64 {
    let g = groups(assignments);
    let cs: Vec<Vec<f64>> = g.iter().map(|m| centroid(points, m)).collect();
    let s: Vec<f64> = g
        .iter()
        .zip(&cs)
        .map(|(m, c)| m.iter().map(|&i| dist(&points[i], c)).sum::<f64>() / m.len() as f64)
        .collect();
    let mut total = 0.0;
    for i in 0..g.len() {
        let mut worst: f64 = 0.0;
        for j in 0..g.len() {
            if i != j {
                let d = dist(&cs[i], &cs[j]);
                if d == 0.0 {
                    return 1e12;
                }
                worst = worst.max((s[i] + s[j]) / d);
            }
        }
        total += worst;
    }
    total / g.len() as f64
}

/// A random instance with `n` points and every label in `0..k` used.
pub fn random_partition(seed: u64, max_points: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=max_points);
    let k = rng.random_range(2..n);
    let points = (0..n)
        .map(|_| (0..3).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let mut assignments: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    // Scramble which points carry the guaranteed labels.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        assignments.swap(i, j);
    }
    (points, assignments)
}

fn cost(params: &NetworkParams, spec: &LayerSpec, x: &[f64], y: u8) -> f64 {
    let p = forward(params, spec, x).unwrap().w3.clamp(1e-12, 1.0 - 1e-12);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// True if any hidden pre-activation lies within `margin` of a kink.
fn near_kink(params: &NetworkParams, spec: &LayerSpec, x: &[f64], margin: f64) -> bool {
    if matches!(spec.hidden_activation, ActivationKind::Sigmoid | ActivationKind::Tanh) {
        return false;
    }
    let t = forward(params, spec, x).unwrap();
    t.a1.iter().chain(&t.a2).any(|a| a.abs() < margin)
}

/// Central differences of the single-example cost for every parameter, in
/// the order θ1, b1, θ2, b2, θ3, b3. `None` marks coordinates where a
/// perturbation would cross a kink.
pub fn finite_difference_gradient(
    params: &NetworkParams,
    spec: &LayerSpec,
    x: &[f64],
    y: u8,
    h: f64,
) -> Vec<Vec<Option<f64>>> {
    let mut out = Vec::new();
    for block in 0..6 {
        let len = params.slices()[block].len();
        let mut g = Vec::with_capacity(len);
        for i in 0..len {
            let mut plus = params.clone();
            plus.slices_mut()[block][i] += h;
            let mut minus = params.clone();
            minus.slices_mut()[block][i] -= h;
            if near_kink(&plus, spec, x, 1e-4) || near_kink(&minus, spec, x, 1e-4) {
                g.push(None);
                continue;
            }
            g.push(Some((cost(&plus, spec, x, y) - cost(&minus, spec, x, y)) / (2.0 * h)));
        }
        out.push(g);
    }
    out
}
