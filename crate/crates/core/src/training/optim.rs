use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("non-finite gradient in parameter `{name}` at coordinate {index}")]
    NonFinite { name: String, index: usize },
    #[error("expected {expected} gradient tensors, got {found}")]
    Count { expected: usize, found: usize },
    #[error("gradient for `{name}` has shape {found:?}, parameter has {expected:?}")]
    Shape {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
}

/// Adam with bias-corrected first and second moments.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    config: AdamConfig,
    names: Vec<String>,
    first: Vec<Tensor<S>>,
    second: Vec<Tensor<S>>,
    steps: i32,
}

impl<S: Scalar> Adam<S> {
    /// Zero moments shaped like `params`; `names` label parameters in errors.
    pub fn new(config: AdamConfig, names: Vec<String>, params: &[Tensor<S>]) -> Self {
        assert_eq!(names.len(), params.len(), "one name per parameter");
        let zeros: Vec<_> = params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        Self {
            config,
            names,
            first: zeros.clone(),
            second: zeros,
            steps: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    /// Applies one update. Gradients are validated before any parameter changes.
    pub fn step(&mut self, params: &mut [Tensor<S>], grads: &[Tensor<S>]) -> Result<(), OptimError> {
        if grads.len() != params.len() || params.len() != self.first.len() {
            return Err(OptimError::Count {
                expected: self.first.len(),
                found: grads.len(),
            });
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(OptimError::Shape {
                    name: self.names[k].clone(),
                    expected: p.shape(),
                    found: g.shape(),
                });
            }
            if let Some(index) = g.as_slice().iter().position(|v| !v.is_finite()) {
                return Err(OptimError::NonFinite {
                    name: self.names[k].clone(),
                    index,
                });
            }
        }

        self.steps += 1;
        let c = &self.config;
        let (b1, b2) = (S::of(c.beta1), S::of(c.beta2));
        let correction1 = S::one() - b1.powi(self.steps);
        let correction2 = S::one() - b2.powi(self.steps);
        let (lr, eps) = (S::of(c.step_size), S::of(c.epsilon));
        for k in 0..params.len() {
            let p = params[k].as_mut_slice();
            let m = self.first[k].as_mut_slice();
            let v = self.second[k].as_mut_slice();
            for (i, &g) in grads[k].as_slice().iter().enumerate() {
                m[i] = b1 * m[i] + (S::one() - b1) * g;
                v[i] = b2 * v[i] + (S::one() - b2) * g * g;
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
