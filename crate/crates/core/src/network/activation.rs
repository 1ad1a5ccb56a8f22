use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LEAKY_ALPHA: f64 = 0.01;

/// Hidden-layer nonlinearity. The output unit is always a sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Relu,
    LeakyRelu { alpha: f64 },
}

impl Default for ActivationKind {
    fn default() -> Self {
        ActivationKind::LeakyRelu {
            alpha: DEFAULT_LEAKY_ALPHA,
        }
    }
}

impl ActivationKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::LeakyRelu { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(
                Error::invalid(format!("leaky_relu alpha {alpha} must lie in (0, 1)")),
            ),
            _ => Ok(()),
        }
    }

    /// Parses `sigmoid`, `tanh`, `relu` or `leaky_relu` (default alpha).
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "tanh" => Ok(ActivationKind::Tanh),
            "relu" => Ok(ActivationKind::Relu),
            "leaky_relu" => Ok(ActivationKind::default()),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu { .. } => "leaky_relu",
        }
    }

    #[inline]
    pub fn apply(&self, a: f64) -> f64 {
        match *self {
            ActivationKind::Sigmoid => sigmoid(a),
            ActivationKind::Tanh => a.tanh(),
            ActivationKind::Relu => a.max(0.0),
            ActivationKind::LeakyRelu { alpha } => {
                if a > 0.0 {
                    a
                } else {
                    alpha * a
                }
            }
        }
    }

    /// Derivative at pre-activation `a`, given the output `w = apply(a)`.
    #[inline]
    pub fn derivative(&self, a: f64, w: f64) -> f64 {
        match *self {
            ActivationKind::Sigmoid => w * (1.0 - w),
            ActivationKind::Tanh => 1.0 - w * w,
            ActivationKind::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu { alpha } => {
                if a > 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Elementwise activation.
pub fn activate(kind: ActivationKind, a: &[f64]) -> Vec<f64> {
    a.iter().map(|&v| kind.apply(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        assert_eq!(activate(ActivationKind::Sigmoid, &[0.0]), vec![0.5]);
        assert_eq!(activate(ActivationKind::Tanh, &[0.0]), vec![0.0]);
        assert_eq!(activate(ActivationKind::Relu, &[-2.0, 3.0]), vec![0.0, 3.0]);
        let lr = activate(ActivationKind::LeakyRelu { alpha: 0.01 }, &[-1.0]);
        assert!((lr[0] + 0.01).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!(sigmoid(-745.0) >= 0.0);
    }

    #[test]
    fn alpha_bounds() {
        assert!(ActivationKind::LeakyRelu { alpha: 0.0 }.validate().is_err());
        assert!(ActivationKind::LeakyRelu { alpha: 1.0 }.validate().is_err());
        assert!(ActivationKind::default().validate().is_ok());
    }

    #[test]
    fn sigmoid_derivative_matches_finite_differences() {
        let h = 1e-5;
        for i in -40..=40 {
            let a = i as f64 * 0.2;
            let w = sigmoid(a);
            let fd = (sigmoid(a + h) - sigmoid(a - h)) / (2.0 * h);
            assert!((ActivationKind::Sigmoid.derivative(a, w) - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn serde_names() {
        let j = serde_json::to_string(&ActivationKind::default()).unwrap();
        assert_eq!(j, r#"{"name":"leaky_relu","alpha":0.01}"#);
        let t: ActivationKind = serde_json::from_str(r#"{"name":"tanh"}"#).unwrap();
        assert_eq!(t, ActivationKind::Tanh);
    }
}
