//! Linear autoencoder that compresses wide hidden activations to 3-D codes.
//!
//! Inputs are centered on their column means, encoded by a `code x d`
//! matrix and decoded by a `d x code` matrix; the mean is added back on
//! reconstruction. With no biases a constant input maps to the zero code.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CustomerVector, EmbeddingSet};
use crate::error::{Error, Result};
use crate::network::{AdamConfig, AdamState, Matrix, MIN_IMPROVEMENT};

/// Width of the hidden layer the compression path starts from.
pub const WIDE_DIM: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub code_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub early_stop_patience: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            code_dim: 3,
            epochs: 500,
            batch_size: 50,
            optimizer: AdamConfig {
                lr: 0.01,
                ..AdamConfig::default()
            },
            early_stop_patience: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearAutoencoder {
    pub mean: Vec<f64>,
    /// `code x d`
    pub encoder: Matrix,
    /// `d x code`
    pub decoder: Matrix,
    /// Mean squared reconstruction error per cell on the training data.
    pub train_mse: f64,
    pub epochs_run: usize,
}

/// Column means computed relative to the first row so constant columns are exact.
fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let first = &rows[0];
    let n = rows.len() as f64;
    (0..first.len())
        .map(|j| first[j] + rows.iter().map(|r| r[j] - first[j]).sum::<f64>() / n)
        .collect()
}

impl LinearAutoencoder {
    /// Trains on `rows` with mini-batch Adam, stopping early on the full-data
    /// reconstruction loss.
    pub fn fit(rows: &[Vec<f64>], config: &AutoencoderConfig, seed: u64) -> Result<Self> {
        if rows.len() < 10 {
            return Err(Error::InsufficientData(format!(
                "autoencoder needs at least 10 vectors, got {}",
                rows.len()
            )));
        }
        let d = rows[0].len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("autoencoder inputs must share a positive dimension"));
        }
        if config.code_dim == 0 || config.epochs == 0 || config.batch_size == 0 {
            return Err(Error::invalid("code_dim, epochs and batch_size must be positive"));
        }
        config.optimizer.validate()?;

        let mean = column_means(rows);
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut encoder = Matrix::zeros(config.code_dim, d);
        let mut decoder = Matrix::zeros(d, config.code_dim);
        for m in [&mut encoder, &mut decoder] {
            let bound = 1.0 / (m.cols as f64).sqrt();
            m.data.iter_mut().for_each(|w| *w = rng.random_range(-bound..=bound));
        }

        let mut model = Self {
            mean,
            encoder,
            decoder,
            train_mse: f64::INFINITY,
            epochs_run: 0,
        };
        let mut best = model.clone();
        let mut best_loss = model.centered_mse(&centered);
        let mut stale = 0usize;
        let mut adam = AdamState::new();
        let mut order: Vec<usize> = (0..centered.len()).collect();
        let patience = config.early_stop_patience.max(1);

        for epoch in 1..=config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size) {
                let (ge, gd) = model.gradients(batch.iter().map(|&i| centered[i].as_slice()), batch.len());
                adam.step(
                    &mut [&mut model.encoder.data, &mut model.decoder.data],
                    &[&ge.data, &gd.data],
                    &config.optimizer,
                )?;
            }
            model.epochs_run = epoch;
            let loss = model.centered_mse(&centered);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let improved = loss < best_loss - MIN_IMPROVEMENT;
            if loss < best_loss {
                best_loss = loss;
                best = model.clone();
            }
            if improved {
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
        best.train_mse = best_loss;
        best.epochs_run = model.epochs_run;
        Ok(best)
    }

    fn code_of_centered(&self, c: &[f64]) -> Vec<f64> {
        self.encoder.affine(c, &vec![0.0; self.encoder.rows])
    }

    fn centered_mse(&self, centered: &[Vec<f64>]) -> f64 {
        let d = self.mean.len() as f64;
        let zero = vec![0.0; self.decoder.rows];
        centered
            .iter()
            .map(|c| {
                let z = self.code_of_centered(c);
                let r = self.decoder.affine(&z, &zero);
                r.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / d
            })
            .sum::<f64>()
            / centered.len() as f64
    }

    fn gradients<'a>(&self, batch: impl Iterator<Item = &'a [f64]>, n: usize) -> (Matrix, Matrix) {
        let d = self.mean.len();
        let scale = 2.0 / (d as f64 * n as f64);
        let zero = vec![0.0; d];
        let mut ge = Matrix::zeros(self.encoder.rows, self.encoder.cols);
        let mut gd = Matrix::zeros(self.decoder.rows, self.decoder.cols);
        for c in batch {
            let z = self.code_of_centered(c);
            let recon = self.decoder.affine(&z, &zero);
            let resid: Vec<f64> = recon.iter().zip(c).map(|(a, b)| a - b).collect();
            gd.add_outer(&resid, &z, scale);
            let dz = self.decoder.transpose_mul(&resid);
            ge.add_outer(&dz, c, scale);
        }
        (ge, gd)
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.len(),
            });
        }
        let c: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.code_of_centered(&c))
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.encode(x)?;
        let zero = vec![0.0; self.decoder.rows];
        Ok(self
            .decoder
            .affine(&z, &zero)
            .iter()
            .zip(&self.mean)
            .map(|(r, m)| r + m)
            .collect())
    }

    /// Mean squared reconstruction error per cell.
    pub fn mse(&self, rows: &[Vec<f64>]) -> Result<f64> {
        let d = self.mean.len() as f64;
        let mut total = 0.0;
        for r in rows {
            let rec = self.reconstruct(r)?;
            total += rec.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / d;
        }
        Ok(total / rows.len().max(1) as f64)
    }
}

/// Compresses 30-D hidden activations to 3-D codes, keeping ids and labels.
pub fn compress_30_to_3(activations: &EmbeddingSet, seed: u64) -> Result<EmbeddingSet> {
    if activations.dim() != WIDE_DIM {
        return Err(Error::DimensionMismatch {
            expected: WIDE_DIM,
            actual: activations.dim(),
        });
    }
    let rows = activations.points();
    let ae = LinearAutoencoder::fit(&rows, &AutoencoderConfig::default(), seed)?;
    let vectors = activations
        .vectors()
        .iter()
        .map(|c| {
            Ok(CustomerVector {
                id: c.id.clone(),
                v: ae.encode(&c.v)?,
                label: c.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = EmbeddingSet::new(vectors)?;
    if let Some(src) = activations.source_model() {
        out = out.with_source(src);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn rank3(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map: Vec<f64> = (0..WIDE_DIM * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..WIDE_DIM)
                    .map(|i| (0..3).map(|k| map[i * 3 + k] * z[k]).sum::<f64>() + 0.5)
                    .collect()
            })
            .collect()
    }

    fn set(rows: &[Vec<f64>]) -> EmbeddingSet {
        EmbeddingSet::new(
            rows.iter()
                .enumerate()
                .map(|(i, r)| CustomerVector { id: i.into(), v: r.clone(), label: Some((i % 2) as u8) })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rank_three_data_reconstructs() {
        let rows = rank3(400, 1);
        let ae = LinearAutoencoder::fit(&rows, &AutoencoderConfig::default(), 7).unwrap();
        let mse = ae.mse(&rows).unwrap();
        assert!(mse < 1e-3, "mse {mse} after {} epochs", ae.epochs_run);
    }

    #[test]
    fn constant_activations_compress_exactly() {
        let rows = vec![vec![0.1; WIDE_DIM]; 20];
        let ae = LinearAutoencoder::fit(&rows, &AutoencoderConfig::default(), 3).unwrap();
        assert_eq!(ae.mse(&rows).unwrap(), 0.0);
        let codes = compress_30_to_3(&set(&rows), 3).unwrap();
        let first = &codes.vectors()[0].v;
        assert!(codes.vectors().iter().all(|c| &c.v == first));
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let rows = rank3(60, 2);
        let a = compress_30_to_3(&set(&rows), 11).unwrap();
        let b = compress_30_to_3(&set(&rows), 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 3);
        assert_eq!(a.vectors()[3].label, Some(1));

        assert!(matches!(
            compress_30_to_3(&set(&rows[..9]), 1),
            Err(Error::InsufficientData(_))
        ));
        let narrow: Vec<Vec<f64>> = rows.iter().map(|r| r[..5].to_vec()).collect();
        assert!(compress_30_to_3(&set(&narrow), 1).is_err());
    }
}
