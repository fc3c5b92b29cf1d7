//! Central finite differences, used as an oracle for tape gradients.

use super::{Scalar, Tensor};

/// Estimates `df/dθ` for every coordinate of every tensor in `params` by
/// `(f(θ + eps·e) − f(θ − eps·e)) / (2·eps)`. `f` must be deterministic.
pub fn finite_difference_gradient<S, F>(params: &[Tensor<S>], eps: S, mut f: F) -> Vec<Tensor<S>>
where
    S: Scalar,
    F: FnMut(&[Tensor<S>]) -> S,
{
    let mut probe = params.to_vec();
    let two_eps = eps + eps;
    let mut grads = Vec::with_capacity(params.len());
    for t in 0..params.len() {
        let mut g = Tensor::zeros(params[t].rows(), params[t].cols());
        for k in 0..params[t].len() {
            let orig = params[t].as_slice()[k];
            probe[t].as_mut_slice()[k] = orig + eps;
            let plus = f(&probe);
            probe[t].as_mut_slice()[k] = orig - eps;
            let minus = f(&probe);
            probe[t].as_mut_slice()[k] = orig;
            g.as_mut_slice()[k] = (plus - minus) / two_eps;
        }
        grads.push(g);
    }
    grads
}

/// `max |exact − estimate| / max(1, |estimate|)` over all coordinates.
pub fn max_relative_error<S: Scalar>(exact: &[Tensor<S>], estimate: &[Tensor<S>]) -> S {
    assert_eq!(exact.len(), estimate.len(), "gradient lists differ in length");
    exact
        .iter()
        .zip(estimate)
        .flat_map(|(a, b)| {
            assert_eq!(a.shape(), b.shape(), "gradient shapes differ");
            a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| (x - y).abs() / y.abs().max(S::one()))
        })
        .fold(S::zero(), S::max)
}
