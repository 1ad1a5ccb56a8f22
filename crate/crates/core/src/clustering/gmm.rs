//! Gaussian mixture with full covariances, fitted by EM.
//!
//! Components start from a modified k-means partition. A covariance only
//! gets [`GMM_REG_COVAR`] added to its diagonal when its Cholesky factor does
//! not exist or has a pivot below that size, so well-conditioned fits are
//! the exact maximum-likelihood update and the likelihood cannot drop.

use nalgebra::DMatrix;

use super::{
    check_points, kmeans_modified, sq_dist, with_canonical_order, ClusterConfig, ClusterMethod,
    ClusterModel, GMM_REG_COVAR,
};
use crate::error::{Error, Result};

/// Responsibility mass below which a component keeps its previous parameters.
const MIN_MASS: f64 = 1e-10;

struct Component {
    weight: f64,
    mean: Vec<f64>,
    cov: Vec<f64>,
    /// Lower Cholesky factor of `cov`, row-major.
    chol: Vec<f64>,
    log_det: f64,
}

fn factor(cov: &mut [f64], d: usize, component: usize) -> Result<(Vec<f64>, f64)> {
    let try_factor = |c: &[f64]| -> Option<(Vec<f64>, f64)> {
        let l = DMatrix::from_row_slice(d, d, c).cholesky()?.l();
        let min_pivot = (0..d).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
        if !(min_pivot * min_pivot >= GMM_REG_COVAR) {
            return None;
        }
        let log_det = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        let rows = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]).collect();
        Some((rows, log_det))
    };
    if let Some(f) = try_factor(cov) {
        return Ok(f);
    }
    for i in 0..d {
        cov[i * d + i] += GMM_REG_COVAR;
    }
    DMatrix::from_row_slice(d, d, cov)
        .cholesky()
        .map(|c| {
            let l = c.l();
            let log_det = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
            let rows = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]).collect();
            (rows, log_det)
        })
        .ok_or(Error::SingularCovariance { component })
}

impl Component {
    fn new(weight: f64, mean: Vec<f64>, mut cov: Vec<f64>, index: usize) -> Result<Self> {
        let d = mean.len();
        let (chol, log_det) = factor(&mut cov, d, index)?;
        Ok(Self {
            weight,
            mean,
            cov,
            chol,
            log_det,
        })
    }

    fn log_density(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        let d = self.mean.len();
        // Forward substitution: L z = x - mean.
        let mut maha = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.chol[i * d + j] * buf[j];
            }
            buf[i] = s / self.chol[i * d + i];
            maha += buf[i] * buf[i];
        }
        -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + self.log_det + maha)
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// E-step: responsibilities (row per point) and total log-likelihood.
fn e_step(points: &[Vec<f64>], comps: &[Component]) -> (Vec<Vec<f64>>, f64) {
    let d = points[0].len();
    let mut buf = vec![0.0; d];
    let mut ll = 0.0;
    let mut logs = vec![0.0; comps.len()];
    let resp = points
        .iter()
        .map(|x| {
            for (l, c) in logs.iter_mut().zip(comps) {
                *l = c.weight.ln() + c.log_density(x, &mut buf);
            }
            let norm = log_sum_exp(&logs);
            ll += norm;
            logs.iter().map(|l| (l - norm).exp()).collect()
        })
        .collect();
    (resp, ll)
}

fn weighted_stats(points: &[Vec<f64>], w: impl Fn(usize) -> f64) -> (f64, Vec<f64>, Vec<f64>) {
    let d = points[0].len();
    let mass: f64 = (0..points.len()).map(&w).sum();
    let mut mean = vec![0.0; d];
    for (i, p) in points.iter().enumerate() {
        let wi = w(i);
        for (m, x) in mean.iter_mut().zip(p) {
            *m += wi * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= mass);
    let mut cov = vec![0.0; d * d];
    for (i, p) in points.iter().enumerate() {
        let wi = w(i);
        for a in 0..d {
            let da = p[a] - mean[a];
            for b in 0..=a {
                cov[a * d + b] += wi * da * (p[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            let v = cov[a * d + b] / mass;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }
    (mass, mean, cov)
}

fn m_step(points: &[Vec<f64>], resp: &[Vec<f64>], prev: &[Component]) -> Result<Vec<Component>> {
    let n = points.len() as f64;
    prev.iter()
        .enumerate()
        .map(|(j, old)| {
            let (mass, mean, cov) = weighted_stats(points, |i| resp[i][j]);
            if mass < MIN_MASS {
                return Component::new(mass / n, old.mean.clone(), old.cov.clone(), j);
            }
            Component::new(mass / n, mean, cov, j)
        })
        .collect()
}

pub fn gmm_em(points: &[Vec<f64>], config: &ClusterConfig) -> Result<ClusterModel> {
    config.validate()?;
    check_points(points)?;
    with_canonical_order(points, |pts| fit_sorted(pts, config))
}

fn fit_sorted(points: &[Vec<f64>], config: &ClusterConfig) -> Result<ClusterModel> {
    let init = kmeans_modified(
        points,
        &ClusterConfig {
            method: ClusterMethod::KmeansModified,
            ..*config
        },
    )?;
    let n = points.len() as f64;
    let mut comps = init
        .centers
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let (mass, mean, cov) = weighted_stats(points, |i| f64::from(u8::from(init.assignments[i] == j)));
            Component::new(mass / n, mean, cov, j)
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut resp, mut ll) = e_step(points, &comps);
    let mut trace = vec![ll];
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        comps = m_step(points, &resp, &comps)?;
        let (r, next) = e_step(points, &comps);
        resp = r;
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if !ll.is_finite() {
            return Err(Error::Diverged { epoch: iterations });
        }
        if gain < config.tol {
            break;
        }
    }

    let assignments: Vec<usize> = resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let sse = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &comps[a].mean))
        .sum();
    Ok(ClusterModel {
        method: ClusterMethod::Gmm,
        centers: comps.iter().map(|c| c.mean.clone()).collect(),
        covariances: Some(comps.iter().map(|c| c.cov.clone()).collect()),
        weights: Some(comps.iter().map(|c| c.weight).collect()),
        assignments,
        sse,
        iterations_used: iterations,
        restarts: init.restarts,
        log_likelihood: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cfg(k: usize, seed: u64) -> ClusterConfig {
        ClusterConfig::new(ClusterMethod::Gmm, k, seed)
    }

    fn gaussians(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let offset = if c == 0 { 0.0 } else { 10.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            let w: f64 = StandardNormal.sample(&mut rng);
            pts.push(vec![offset + z, y, w]);
            truth.push(c);
        }
        (pts, truth)
    }

    #[test]
    fn recovers_two_components() {
        let (pts, truth) = gaussians(1, 600);
        let m = gmm_em(&pts, &cfg(2, 3)).unwrap();
        let lo = if m.centers[0][0] < m.centers[1][0] { 0 } else { 1 };
        assert!(m.centers[lo][0].abs() < 0.5);
        assert!((m.centers[1 - lo][0] - 10.0).abs() < 0.5);
        let hits = m
            .assignments
            .iter()
            .zip(&truth)
            .filter(|(a, t)| (**a == lo) == (**t == 0))
            .count();
        assert!(hits as f64 >= 0.99 * pts.len() as f64);
    }

    #[test]
    fn single_component_is_the_sample_moments() {
        let (pts, _) = gaussians(2, 200);
        let m = gmm_em(&pts, &cfg(1, 0)).unwrap();
        let n = pts.len() as f64;
        let mean: Vec<f64> = (0..3).map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / n).collect();
        for j in 0..3 {
            assert!((m.centers[0][j] - mean[j]).abs() < 1e-9);
        }
        let cov = &m.covariances.as_ref().unwrap()[0];
        for a in 0..3 {
            for b in 0..3 {
                let s = pts.iter().map(|p| (p[a] - mean[a]) * (p[b] - mean[b])).sum::<f64>() / n;
                assert!((cov[a * 3 + b] - s).abs() < 1e-9);
            }
        }
        assert_eq!(m.weights.as_deref(), Some(&[1.0][..]));
    }

    #[test]
    fn likelihood_never_drops() {
        for seed in 0..5 {
            let (pts, _) = gaussians(10 + seed, 300);
            let m = gmm_em(&pts, &cfg(3, seed)).unwrap();
            for w in m.log_likelihood.windows(2) {
                assert!(w[1] - w[0] >= -1e-9, "{:?}", m.log_likelihood);
            }
        }
    }

    #[test]
    fn permutation_equivariant() {
        let (pts, _) = gaussians(4, 150);
        let a = gmm_em(&pts, &cfg(3, 8)).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let b = gmm_em(&shuffled, &cfg(3, 8)).unwrap();
        for (pos, &i) in perm.iter().enumerate() {
            assert_eq!(b.assignments[pos], a.assignments[i]);
        }
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn degenerate_cluster_is_regularized() {
        // Two exact duplicates form one component; its covariance is zero.
        let mut pts = vec![vec![5.0, 5.0, 5.0]; 2];
        let (more, _) = gaussians(5, 40);
        pts.extend(more.into_iter().map(|p| vec![p[0] * 0.1, p[1] * 0.1, p[2] * 0.1]));
        let m = gmm_em(&pts, &cfg(2, 0)).unwrap();
        assert!(m.log_likelihood.iter().all(|l| l.is_finite()));
        assert_eq!(m.assignments[0], m.assignments[1]);
    }
}
