use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Fingerprint;
use crate::numerics::{sigmoid_scalar, Tensor};
use crate::training::{Adam, AdamConfig, OptimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Coefficient of `½‖w‖²` (the bias is not penalized).
    pub l2: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            l2: 1e-3,
            adam: AdamConfig {
                step_size: 1e-2,
                ..AdamConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("empty training set")]
    Empty,
    #[error("{fingerprints} fingerprints but {labels} labels")]
    Count { fingerprints: usize, labels: usize },
    #[error("fingerprint lengths differ ({0} vs {1})")]
    Length(usize, usize),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    /// `sigmoid(wᵀx + b)`.
    pub fn predict(&self, fp: &Fingerprint) -> f64 {
        let z: f64 = fp.ones().into_iter().map(|b| self.weights[b]).sum::<f64>() + self.bias;
        sigmoid_scalar(z)
    }
}

/// L2-regularized logistic regression trained with Adam on shuffled minibatches.
pub fn train_logistic(fps: &[Fingerprint], labels: &[u8], config: &LogisticConfig) -> Result<LogisticModel, BaselineError> {
    if fps.len() != labels.len() {
        return Err(BaselineError::Count {
            fingerprints: fps.len(),
            labels: labels.len(),
        });
    }
    let nbits = fps.first().ok_or(BaselineError::Empty)?.nbits();
    if let Some(fp) = fps.iter().find(|f| f.nbits() != nbits) {
        return Err(BaselineError::Length(nbits, fp.nbits()));
    }
    let active: Vec<Vec<usize>> = fps.iter().map(Fingerprint::ones).collect();

    let mut params = vec![Tensor::zeros(1, nbits), Tensor::zeros(1, 1)];
    let mut opt = Adam::new(config.adam, vec!["weights".into(), "bias".into()], &params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..fps.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            let w = params[0].as_slice();
            let b = params[1].as_slice()[0];
            let mut gw = params[0].scale(config.l2);
            let mut gb = 0.0;
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let z: f64 = active[i].iter().map(|&k| w[k]).sum::<f64>() + b;
                let residual = (sigmoid_scalar(z) - f64::from(labels[i])) * scale;
                for &k in &active[i] {
                    gw.as_mut_slice()[k] += residual;
                }
                gb += residual;
            }
            opt.step(&mut params, &[gw, Tensor::filled(1, 1, gb)])?;
        }
    }
    Ok(LogisticModel {
        weights: params[0].as_slice().to_vec(),
        bias: params[1].as_slice()[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::circular_fingerprint;
    use crate::molgraph::{MolecularGraph, Vocabulary};

    fn fp_of(bonds: &[(usize, usize, usize)], n: usize) -> Fingerprint {
        let g = MolecularGraph::new(vec!["C".into(); n], 4, bonds).unwrap();
        circular_fingerprint(&g, &Vocabulary::default(), 1, 64).unwrap()
    }

    #[test]
    fn separable_set_is_fit() {
        // Single bonds versus double bonds give disjoint bit patterns.
        let a = fp_of(&[(0, 1, 1)], 2);
        let b = fp_of(&[(0, 1, 2)], 2);
        assert_ne!(a, b);
        let fps = vec![a.clone(), b.clone(), a, b];
        let labels = [1, 0, 1, 0];
        let model = train_logistic(&fps, &labels, &LogisticConfig::default()).unwrap();
        for (fp, &y) in fps.iter().zip(&labels) {
            assert_eq!(u8::from(model.predict(fp) >= 0.5), y);
        }
    }

    #[test]
    fn identical_inputs_balanced_labels_give_half() {
        let fp = fp_of(&[], 1);
        let fps = vec![fp.clone(); 10];
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let config = LogisticConfig {
            batch_size: 10,
            l2: 0.1,
            ..LogisticConfig::default()
        };
        let model = train_logistic(&fps, &labels, &config).unwrap();
        assert!((model.predict(&fp) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let fps: Vec<_> = (1..6).map(|n| fp_of(&[], n)).collect();
        let labels = [1, 0, 0, 1, 1];
        let c = LogisticConfig::default();
        assert_eq!(train_logistic(&fps, &labels, &c).unwrap(), train_logistic(&fps, &labels, &c).unwrap());
    }

    #[test]
    fn empty_set_is_an_error() {
        assert_eq!(train_logistic(&[], &[], &LogisticConfig::default()), Err(BaselineError::Empty));
    }
}
