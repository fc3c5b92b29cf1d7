//! Elementwise activations, affine maps, softmax and dropout on plain tensors.
//!
//! The tape in [`super::tape`] records the same operations for differentiation;
//! the functions here are the reference forward definitions both share.

use rand::Rng;

use super::{NumericsError, Scalar, ShapeError, Tensor};

#[inline]
pub fn relu_scalar<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid_scalar<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

pub fn relu<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(relu_scalar)
}

pub fn tanh<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| v.tanh())
}

pub fn sigmoid<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(sigmoid_scalar)
}

/// `W x + b` for a column vector `x`.
pub fn affine<S: Scalar>(w: &Tensor<S>, x: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>, ShapeError> {
    let wx = w.matmul(x)?;
    if b.shape() != wx.shape() {
        return Err(ShapeError::new("affine bias", wx.shape(), b.shape()));
    }
    wx.add(b)
}

pub fn concat<S: Scalar>(x: &Tensor<S>, y: &Tensor<S>) -> Result<Tensor<S>, ShapeError> {
    x.concat(y)
}

/// Numerically stable softmax (max subtraction).
pub fn softmax<S: Scalar>(scores: &[S]) -> Result<Vec<S>, NumericsError> {
    let max = scores
        .iter()
        .copied()
        .reduce(S::max)
        .ok_or(NumericsError::EmptySoftmax)?;
    let exps: Vec<S> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `−(y·ln p + (1−y)·ln(1−p))` with `p` clamped to `[1e-12, 1 − 1e-12]`.
pub fn cross_entropy<S: Scalar>(prob: S, label: S) -> S {
    let lo = S::of(super::tape::PROB_CLAMP);
    let p = prob.max(lo).min(S::one() - lo);
    -(label * p.ln() + (S::one() - label) * (S::one() - p).ln())
}

/// Inverted-dropout mask: entries are `0` with probability `rate`, otherwise `1/(1-rate)`.
pub fn dropout_mask<S: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut R,
) -> Result<Tensor<S>, NumericsError> {
    check_rate(rate)?;
    let keep = S::of(1.0 / (1.0 - rate));
    let data = (0..rows * cols)
        .map(|_| if rng.gen::<f64>() < rate { S::zero() } else { keep })
        .collect();
    Ok(Tensor::from_vec(rows, cols, data)?)
}

pub(crate) fn check_rate(rate: f64) -> Result<(), NumericsError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NumericsError::DropoutRate(rate));
    }
    Ok(())
}

/// Inverted dropout. Identity at inference or when `rate == 0`.
pub fn dropout<S: Scalar, R: Rng + ?Sized>(
    x: &Tensor<S>,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<Tensor<S>, NumericsError> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let mask = dropout_mask(x.rows(), x.cols(), rate, rng)?;
    Ok(x.hadamard(&mask)?)
}
