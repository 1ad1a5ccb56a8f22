//! Forward and backward passes and the cross-entropy cost.

use super::{sigmoid, LayerSpec, Matrix, NetworkParams};
use crate::error::{Error, Result};

/// Smallest probability fed to `ln` inside the loss.
pub const PROB_CLAMP: f64 = 1e-12;

/// Pre- (`a*`) and post-activation (`w*`) values of every layer for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub a1: Vec<f64>,
    /// Embedding-layer activations.
    pub w1: Vec<f64>,
    pub a2: Vec<f64>,
    pub w2: Vec<f64>,
    pub a3: f64,
    /// Classifier output probability.
    pub w3: f64,
}

/// Gradients of the cost with respect to every parameter, shaped like [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub d_theta1: Matrix,
    pub d_bias1: Vec<f64>,
    pub d_theta2: Matrix,
    pub d_bias2: Vec<f64>,
    pub d_theta3: Matrix,
    pub d_bias3: f64,
}

impl GradientSet {
    pub fn zeros(spec: &LayerSpec) -> Self {
        let z = NetworkParams::zeros(spec);
        Self {
            d_theta1: z.theta1,
            d_bias1: z.bias1,
            d_theta2: z.theta2,
            d_bias2: z.bias2,
            d_theta3: z.theta3,
            d_bias3: 0.0,
        }
    }

    /// Same order as [`NetworkParams::slices`].
    pub fn slices(&self) -> [&[f64]; 6] {
        [
            &self.d_theta1.data,
            &self.d_bias1,
            &self.d_theta2.data,
            &self.d_bias2,
            &self.d_theta3.data,
            std::slice::from_ref(&self.d_bias3),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.d_theta1.data,
            &mut self.d_bias1,
            &mut self.d_theta2.data,
            &mut self.d_bias2,
            &mut self.d_theta3.data,
            std::slice::from_mut(&mut self.d_bias3),
        ]
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.slices_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (t, o) in self.slices_mut().into_iter().zip(other.slices()) {
            t.iter_mut().zip(o).for_each(|(v, w)| *v += w);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

pub fn forward(params: &NetworkParams, spec: &LayerSpec, x: &[f64]) -> Result<ForwardTrace> {
    if x.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            actual: x.len(),
        });
    }
    params.check_shape(spec)?;
    Ok(forward_unchecked(params, spec, x))
}

pub(crate) fn forward_unchecked(params: &NetworkParams, spec: &LayerSpec, x: &[f64]) -> ForwardTrace {
    let h = spec.hidden_activation;
    let a1 = params.theta1.affine(x, &params.bias1);
    let w1: Vec<f64> = a1.iter().map(|&a| h.apply(a)).collect();
    let a2 = params.theta2.affine(&w1, &params.bias2);
    let w2: Vec<f64> = a2.iter().map(|&a| h.apply(a)).collect();
    let a3 = params.theta3.affine(&w2, std::slice::from_ref(&params.bias3))[0];
    ForwardTrace {
        a1,
        w1,
        a2,
        w2,
        a3,
        w3: sigmoid(a3),
    }
}

/// Binary cross-entropy of one prediction, `>= 0`.
#[inline]
pub fn bce(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Mean binary cross-entropy over a batch of `(probability, label)` pairs.
pub fn loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            actual: labels.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::InsufficientData("loss over an empty batch".into()));
    }
    Ok(probs.iter().zip(labels).map(|(&p, &y)| bce(p, y)).sum::<f64>() / probs.len() as f64)
}

/// Gradient of the single-example cost with respect to every parameter.
pub fn backward(
    trace: &ForwardTrace,
    params: &NetworkParams,
    spec: &LayerSpec,
    x: &[f64],
    y: u8,
) -> Result<GradientSet> {
    params.check_shape(spec)?;
    if x.len() != spec.input_dim
        || trace.a1.len() != spec.hidden1_dim
        || trace.w1.len() != spec.hidden1_dim
        || trace.a2.len() != spec.hidden2_dim
        || trace.w2.len() != spec.hidden2_dim
    {
        return Err(Error::invalid("trace does not match the network shape"));
    }
    let mut grads = GradientSet::zeros(spec);
    accumulate_backward(trace, params, spec, x, y, 1.0, &mut grads);
    Ok(grads)
}

/// Adds `scale ·` the single-example gradient into `grads`.
pub(crate) fn accumulate_backward(
    trace: &ForwardTrace,
    params: &NetworkParams,
    spec: &LayerSpec,
    x: &[f64],
    y: u8,
    scale: f64,
    grads: &mut GradientSet,
) {
    let h = spec.hidden_activation;
    let delta3 = trace.w3 - f64::from(y);
    let delta2: Vec<f64> = params
        .theta3
        .transpose_mul(&[delta3])
        .iter()
        .zip(trace.a2.iter().zip(&trace.w2))
        .map(|(g, (&a, &w))| g * h.derivative(a, w))
        .collect();
    let delta1: Vec<f64> = params
        .theta2
        .transpose_mul(&delta2)
        .iter()
        .zip(trace.a1.iter().zip(&trace.w1))
        .map(|(g, (&a, &w))| g * h.derivative(a, w))
        .collect();

    grads.d_theta3.add_outer(&[delta3], &trace.w2, scale);
    grads.d_theta2.add_outer(&delta2, &trace.w1, scale);
    grads.d_theta1.add_outer(&delta1, x, scale);
    if spec.use_bias {
        grads.d_bias3 += scale * delta3;
        for (b, d) in grads.d_bias2.iter_mut().zip(&delta2) {
            *b += scale * d;
        }
        for (b, d) in grads.d_bias1.iter_mut().zip(&delta1) {
            *b += scale * d;
        }
    }
}

/// Mean gradient and mean loss over a batch.
pub fn batch_gradients(
    params: &NetworkParams,
    spec: &LayerSpec,
    xs: &[&[f64]],
    ys: &[u8],
) -> Result<(GradientSet, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    params.check_shape(spec)?;
    let scale = 1.0 / xs.len() as f64;
    let mut grads = GradientSet::zeros(spec);
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        if x.len() != spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim,
                actual: x.len(),
            });
        }
        let trace = forward_unchecked(params, spec, x);
        total += bce(trace.w3, y);
        accumulate_backward(&trace, params, spec, x, y, scale, &mut grads);
    }
    Ok((grads, total * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, ActivationKind};

    #[test]
    fn zero_params_give_half() {
        let spec = LayerSpec::new(4);
        let t = forward(&NetworkParams::zeros(&spec), &spec, &[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(t.w3, 0.5);
    }

    #[test]
    fn hand_evaluated_sigmoid_chain() {
        let spec = LayerSpec::new(1)
            .with_hidden(1, 1)
            .with_activation(ActivationKind::Sigmoid);
        let mut p = NetworkParams::zeros(&spec);
        p.theta1.data[0] = 1.0;
        p.theta2.data[0] = 1.0;
        p.theta3.data[0] = 1.0;
        let t = forward(&p, &spec, &[0.0]).unwrap();
        let w2 = 1.0 / (1.0 + (-0.5f64).exp());
        let w3 = 1.0 / (1.0 + (-w2).exp());
        assert_eq!(t.w1, vec![0.5]);
        assert!((t.w2[0] - w2).abs() < 1e-15);
        assert!((t.w3 - w3).abs() < 1e-15);
        assert!((t.w2[0] - 0.6225).abs() < 1e-4);
        assert!((t.w3 - 0.6508).abs() < 1e-4);
    }

    #[test]
    fn wrong_input_length() {
        let spec = LayerSpec::new(3);
        assert!(matches!(
            forward(&NetworkParams::zeros(&spec), &spec, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loss_values() {
        assert!((loss(&[0.5], &[1]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(loss(&[1.0 - 1e-15], &[1]).unwrap() < 1e-11);
        let l = loss(&[0.9, 0.2], &[1, 0]).unwrap();
        let expected = (-(0.9f64).ln() - (0.8f64).ln()) / 2.0;
        assert!((l - expected).abs() < 1e-15);
        assert!((l - 0.1643).abs() < 1e-4);
        assert!(loss(&[0.0], &[1]).unwrap().is_finite());
    }

    #[test]
    fn perfect_prediction_has_zero_gradient() {
        let spec = LayerSpec::new(2).with_activation(ActivationKind::Tanh);
        let p = init_params(&spec, 3).unwrap();
        let x = [0.3, -0.7];
        let mut trace = forward(&p, &spec, &x).unwrap();
        // Force the output onto the label.
        trace.w3 = 1.0;
        let g = backward(&trace, &p, &spec, &x, 1).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn single_layer_hand_chain_rule() {
        // θ = 0 gives an output of 0.5. The output bias sees a constant
        // input of 1, so its gradient is (0.5 - 1) · 1; the output weight
        // sees w2 = sigmoid(0) = 0.5.
        let spec = LayerSpec::new(1)
            .with_hidden(1, 1)
            .with_activation(ActivationKind::Sigmoid);
        let p = NetworkParams::zeros(&spec);
        let x = [1.0];
        let t = forward(&p, &spec, &x).unwrap();
        let g = backward(&t, &p, &spec, &x, 1).unwrap();
        assert_eq!(g.d_bias3, -0.5);
        assert_eq!(g.d_theta3.data[0], -0.5 * 0.5);
        // θ3 = 0 blocks the signal to earlier layers.
        assert_eq!(g.d_theta1.data[0], 0.0);
    }

    #[test]
    fn bias_free_mode_leaves_bias_gradients_zero() {
        let mut spec = LayerSpec::new(3);
        spec.use_bias = false;
        let p = init_params(&spec, 2).unwrap();
        let x = [0.1, 0.2, -0.3];
        let g = backward(&forward(&p, &spec, &x).unwrap(), &p, &spec, &x, 1).unwrap();
        assert_eq!(g.d_bias3, 0.0);
        assert!(g.d_bias1.iter().chain(&g.d_bias2).all(|&b| b == 0.0));
    }
}
