use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ActivationKind;
use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self · x + bias`
    pub fn affine(&self, x: &[f64], bias: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + bias[r]
            })
            .collect()
    }

    /// `selfᵀ · d`
    pub fn transpose_mul(&self, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &dr) in d.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += w * dr;
            }
        }
        out
    }

    /// `self += scale · d xᵀ`
    pub fn add_outer(&mut self, d: &[f64], x: &[f64], scale: f64) {
        for (r, &dr) in d.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, v) in row.iter_mut().zip(x) {
                *w += scale * dr * v;
            }
        }
    }
}

/// Shape of the `input -> hidden1 (embedding) -> hidden2 -> 1` classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    /// Width of the embedding layer.
    pub hidden1_dim: usize,
    pub hidden2_dim: usize,
    pub hidden_activation: ActivationKind,
    /// When false every bias stays at zero, matching a bias-free formulation.
    #[serde(default = "default_true")]
    pub use_bias: bool,
}

fn default_true() -> bool {
    true
}

impl LayerSpec {
    /// `input_dim -> 3 -> 10 -> 1` with leaky ReLU hidden layers.
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden1_dim: 3,
            hidden2_dim: 10,
            hidden_activation: ActivationKind::default(),
            use_bias: true,
        }
    }

    pub fn with_hidden(mut self, hidden1: usize, hidden2: usize) -> Self {
        self.hidden1_dim = hidden1;
        self.hidden2_dim = hidden2;
        self
    }

    pub fn with_activation(mut self, activation: ActivationKind) -> Self {
        self.hidden_activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden1_dim == 0 || self.hidden2_dim == 0 {
            return Err(Error::invalid("all layer widths must be at least 1"));
        }
        self.hidden_activation.validate()
    }

    /// Output activation; fixed.
    pub fn output_activation(&self) -> ActivationKind {
        ActivationKind::Sigmoid
    }
}

/// Weights and biases of the three affine layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// `hidden1 x input`
    pub theta1: Matrix,
    pub bias1: Vec<f64>,
    /// `hidden2 x hidden1`
    pub theta2: Matrix,
    pub bias2: Vec<f64>,
    /// `1 x hidden2`
    pub theta3: Matrix,
    pub bias3: f64,
}

impl NetworkParams {
    pub fn zeros(spec: &LayerSpec) -> Self {
        Self {
            theta1: Matrix::zeros(spec.hidden1_dim, spec.input_dim),
            bias1: vec![0.0; spec.hidden1_dim],
            theta2: Matrix::zeros(spec.hidden2_dim, spec.hidden1_dim),
            bias2: vec![0.0; spec.hidden2_dim],
            theta3: Matrix::zeros(1, spec.hidden2_dim),
            bias3: 0.0,
        }
    }

    pub fn check_shape(&self, spec: &LayerSpec) -> Result<()> {
        let ok = self.theta1.rows == spec.hidden1_dim
            && self.theta1.cols == spec.input_dim
            && self.bias1.len() == spec.hidden1_dim
            && self.theta2.rows == spec.hidden2_dim
            && self.theta2.cols == spec.hidden1_dim
            && self.bias2.len() == spec.hidden2_dim
            && self.theta3.rows == 1
            && self.theta3.cols == spec.hidden2_dim
            && [&self.theta1, &self.theta2, &self.theta3]
                .iter()
                .all(|m| m.data.len() == m.rows * m.cols);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("network parameters do not match the layer spec"))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Parameter tensors in a fixed order: θ1, b1, θ2, b2, θ3, b3.
    pub fn slices(&self) -> [&[f64]; 6] {
        [
            &self.theta1.data,
            &self.bias1,
            &self.theta2.data,
            &self.bias2,
            &self.theta3.data,
            std::slice::from_ref(&self.bias3),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.theta1.data,
            &mut self.bias1,
            &mut self.theta2.data,
            &mut self.bias2,
            &mut self.theta3.data,
            std::slice::from_mut(&mut self.bias3),
        ]
    }
}

/// Weights uniform in `±1/sqrt(fan_in)` per layer, biases zero.
pub fn init_params(spec: &LayerSpec, seed: u64) -> Result<NetworkParams> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = NetworkParams::zeros(spec);
    for m in [&mut params.theta1, &mut params.theta2, &mut params.theta3] {
        let bound = 1.0 / (m.cols as f64).sqrt();
        for w in &mut m.data {
            *w = rng.random_range(-bound..=bound);
        }
    }
    Ok(params)
}
