//! Reverse-mode differentiation over matrix-valued nodes.
//!
//! A [`Tape`] records one forward pass. Every operation appends a node holding
//! its value; [`Tape::backward`] walks the nodes in reverse and accumulates
//! adjoints. Parameters enter through [`Tape::param`] and receive gradients by
//! parameter index.

use std::sync::Arc;

use rand::Rng;

use super::ops::{dropout_mask, relu_scalar, sigmoid_scalar};
use super::{NumericsError, Scalar, ShapeError, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op<S> {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    TMatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    ConcatCols(Var, Var),
    Sum(Var),
    Lerp { gate: Var, new: Var, old: Var },
    Gather { source: Var, index: Arc<[usize]> },
    SegmentSoftmax { scores: Var, offsets: Arc<[usize]> },
    SegmentWeightedSum { values: Var, weights: Var, offsets: Arc<[usize]> },
    Bce { prob: Var, label: S },
}

struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
}

pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

/// Lower/upper clamp applied to probabilities inside the cross-entropy node.
pub const PROB_CLAMP: f64 = 1e-12;

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, value: Tensor<S>) -> Var {
        self.push(value, Op::Constant)
    }

    /// Registers parameter number `index`; its gradient is reported under that index.
    pub fn param(&mut self, index: usize, value: &Tensor<S>) -> Var {
        self.push(value.clone(), Op::Param(index))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    /// `a · bᵀ`; with weights stored `out x in`, `x · Wᵀ` maps rows of `x`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).matmul_t(self.value(b))?;
        Ok(self.push(v, Op::MatMulT(a, b)))
    }

    /// `aᵀ · b`.
    pub fn t_matmul(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).t_matmul(self.value(b))?;
        Ok(self.push(v, Op::TMatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    /// Adds the `1 x n` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).add_row(self.value(bias))?;
        Ok(self.push(v, Op::AddRow(a, bias)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).hadamard(self.value(b))?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(relu_scalar);
        self.push(v, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.tanh());
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid_scalar);
        self.push(v, Op::Sigmoid(a))
    }

    /// Softmax over all entries of `a` (a row or column vector).
    pub fn softmax(&mut self, a: Var) -> Result<Var, NumericsError> {
        let x = self.value(a);
        let p = super::softmax(x.as_slice())?;
        let v = Tensor::from_vec(x.rows(), x.cols(), p)?;
        Ok(self.push(v, Op::Softmax(a)))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, ShapeError> {
        let v = self.value(a).concat_cols(self.value(b))?;
        Ok(self.push(v, Op::ConcatCols(a, b)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Tensor::filled(1, 1, self.value(a).sum());
        self.push(v, Op::Sum(a))
    }

    /// Gated update `gate ∘ new + (1 − gate) ∘ old`.
    pub fn lerp(&mut self, gate: Var, new: Var, old: Var) -> Result<Var, ShapeError> {
        let a = self.value(gate);
        let n = self.value(new);
        let o = self.value(old);
        if a.shape() != n.shape() || n.shape() != o.shape() {
            return Err(ShapeError::new("lerp", a.shape(), o.shape()));
        }
        let data = a
            .as_slice()
            .iter()
            .zip(n.as_slice())
            .zip(o.as_slice())
            .map(|((&a, &n), &o)| a * n + (S::one() - a) * o)
            .collect();
        let v = Tensor::from_vec(a.rows(), a.cols(), data)?;
        Ok(self.push(v, Op::Lerp { gate, new, old }))
    }

    /// `out[e] = source[index[e]]` (row gather).
    pub fn gather_rows(&mut self, source: Var, index: Arc<[usize]>) -> Result<Var, ShapeError> {
        let src = self.value(source);
        let cols = src.cols();
        let mut out = Tensor::zeros(index.len(), cols);
        for (e, &j) in index.iter().enumerate() {
            if j >= src.rows() {
                return Err(ShapeError::new("gather_rows", src.shape(), (j, cols)));
            }
            out.row_slice_mut(e).copy_from_slice(src.row_slice(j));
        }
        Ok(self.push(out, Op::Gather { source, index }))
    }

    /// Softmax of an `nnz x 1` score column within each segment
    /// `offsets[i]..offsets[i + 1]`. Empty segments produce nothing.
    pub fn segment_softmax(&mut self, scores: Var, offsets: Arc<[usize]>) -> Result<Var, NumericsError> {
        let s = self.value(scores);
        let nnz = offsets.last().copied().unwrap_or(0);
        if s.cols() != 1 || s.rows() != nnz {
            return Err(ShapeError::new("segment_softmax", s.shape(), (nnz, 1)).into());
        }
        let mut out = Vec::with_capacity(nnz);
        for w in offsets.windows(2) {
            if w[0] < w[1] {
                out.extend(super::softmax(&s.as_slice()[w[0]..w[1]])?);
            }
        }
        let v = Tensor::column(out);
        Ok(self.push(v, Op::SegmentSoftmax { scores, offsets }))
    }

    /// `out[i] = Σ_{e ∈ segment i} weights[e] · values[e]`, giving one row per segment.
    pub fn segment_weighted_sum(&mut self, values: Var, weights: Var, offsets: Arc<[usize]>) -> Result<Var, ShapeError> {
        let vals = self.value(values);
        let w = self.value(weights);
        let nnz = offsets.last().copied().unwrap_or(0);
        if vals.rows() != nnz || w.shape() != (nnz, 1) {
            return Err(ShapeError::new("segment_weighted_sum", vals.shape(), w.shape()));
        }
        let segments = offsets.len().saturating_sub(1);
        let mut out = Tensor::zeros(segments, vals.cols());
        for i in 0..segments {
            let row = out.row_slice_mut(i);
            for e in offsets[i]..offsets[i + 1] {
                let we = w.as_slice()[e];
                for (o, &v) in row.iter_mut().zip(vals.row_slice(e)) {
                    *o += we * v;
                }
            }
        }
        Ok(self.push(out, Op::SegmentWeightedSum { values, weights, offsets }))
    }

    /// Binary cross-entropy of a `1 x 1` probability against `label`, with the
    /// probability clamped to `[1e-12, 1 - 1e-12]`.
    pub fn bce(&mut self, prob: Var, label: S) -> Result<Var, ShapeError> {
        let p = self.value(prob);
        if p.shape() != (1, 1) {
            return Err(ShapeError::new("bce", p.shape(), (1, 1)));
        }
        let loss = super::cross_entropy(p.as_slice()[0], label);
        Ok(self.push(Tensor::filled(1, 1, loss), Op::Bce { prob, label }))
    }

    /// Inverted dropout: multiplies `a` by a freshly drawn constant mask.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, rate: f64, rng: &mut R) -> Result<Var, NumericsError> {
        super::ops::check_rate(rate)?;
        if rate == 0.0 {
            return Ok(a);
        }
        let (r, c) = self.value(a).shape();
        let mask = dropout_mask(r, c, rate, rng)?;
        let m = self.constant(mask);
        Ok(self.mul(a, m)?)
    }

    /// Reverse pass from the `1 x 1` node `loss`.
    pub fn backward(&self, loss: Var) -> Gradients<S> {
        assert_eq!(self.value(loss).shape(), (1, 1), "backward needs a scalar loss");
        let mut adj: Vec<Option<Tensor<S>>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(Tensor::filled(1, 1, S::one()));
        let mut params = Vec::new();

        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(p) => params.push((*p, g)),
                Op::MatMul(a, b) => {
                    let da = g.matmul_t(self.value(*b)).expect("recorded shapes");
                    let db = self.value(*a).t_matmul(&g).expect("recorded shapes");
                    accumulate(&mut adj, *a, da);
                    accumulate(&mut adj, *b, db);
                }
                Op::MatMulT(a, b) => {
                    let da = g.matmul(self.value(*b)).expect("recorded shapes");
                    let db = g.t_matmul(self.value(*a)).expect("recorded shapes");
                    accumulate(&mut adj, *a, da);
                    accumulate(&mut adj, *b, db);
                }
                Op::TMatMul(a, b) => {
                    let da = self.value(*b).matmul_t(&g).expect("recorded shapes");
                    let db = self.value(*a).matmul(&g).expect("recorded shapes");
                    accumulate(&mut adj, *a, da);
                    accumulate(&mut adj, *b, db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj, *a, g.clone());
                    accumulate(&mut adj, *b, g);
                }
                Op::AddRow(a, bias) => {
                    let mut db = Tensor::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (d, &v) in db.as_mut_slice().iter_mut().zip(g.row_slice(i)) {
                            *d += v;
                        }
                    }
                    accumulate(&mut adj, *a, g);
                    accumulate(&mut adj, *bias, db);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, *b, g.scale(-S::one()));
                    accumulate(&mut adj, *a, g);
                }
                Op::Mul(a, b) => {
                    let da = g.hadamard(self.value(*b)).expect("recorded shapes");
                    let db = g.hadamard(self.value(*a)).expect("recorded shapes");
                    accumulate(&mut adj, *a, da);
                    accumulate(&mut adj, *b, db);
                }
                Op::Relu(a) => {
                    let d = g
                        .zip_map(self.value(*a), "relu'", |g, x| if x > S::zero() { g } else { S::zero() })
                        .expect("recorded shapes");
                    accumulate(&mut adj, *a, d);
                }
                Op::Tanh(a) => {
                    let d = g
                        .zip_map(&node.value, "tanh'", |g, y| g * (S::one() - y * y))
                        .expect("recorded shapes");
                    accumulate(&mut adj, *a, d);
                }
                Op::Sigmoid(a) => {
                    let d = g
                        .zip_map(&node.value, "sigmoid'", |g, y| g * y * (S::one() - y))
                        .expect("recorded shapes");
                    accumulate(&mut adj, *a, d);
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let inner = super::tensor::dot(g.as_slice(), y.as_slice());
                    let d = g
                        .zip_map(y, "softmax'", |g, y| y * (g - inner))
                        .expect("recorded shapes");
                    accumulate(&mut adj, *a, d);
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.value(*a).cols();
                    let cb = self.value(*b).cols();
                    let mut da = Tensor::zeros(g.rows(), ca);
                    let mut db = Tensor::zeros(g.rows(), cb);
                    for i in 0..g.rows() {
                        let row = g.row_slice(i);
                        da.row_slice_mut(i).copy_from_slice(&row[..ca]);
                        db.row_slice_mut(i).copy_from_slice(&row[ca..]);
                    }
                    accumulate(&mut adj, *a, da);
                    accumulate(&mut adj, *b, db);
                }
                Op::Sum(a) => {
                    let (r, c) = self.value(*a).shape();
                    accumulate(&mut adj, *a, Tensor::filled(r, c, g.as_slice()[0]));
                }
                Op::Lerp { gate, new, old } => {
                    let a = self.value(*gate);
                    let n = self.value(*new);
                    let o = self.value(*old);
                    let dgate = g
                        .zip_map(&n.sub(o).expect("recorded shapes"), "lerp'", |g, d| g * d)
                        .expect("recorded shapes");
                    let dnew = g.hadamard(a).expect("recorded shapes");
                    let dold = g.zip_map(a, "lerp'", |g, a| g * (S::one() - a)).expect("recorded shapes");
                    accumulate(&mut adj, *gate, dgate);
                    accumulate(&mut adj, *new, dnew);
                    accumulate(&mut adj, *old, dold);
                }
                Op::Gather { source, index } => {
                    let (r, c) = self.value(*source).shape();
                    let mut d = Tensor::zeros(r, c);
                    for (e, &j) in index.iter().enumerate() {
                        for (t, &v) in d.row_slice_mut(j).iter_mut().zip(g.row_slice(e)) {
                            *t += v;
                        }
                    }
                    accumulate(&mut adj, *source, d);
                }
                Op::SegmentSoftmax { scores, offsets } => {
                    let y = node.value.as_slice();
                    let gs = g.as_slice();
                    let mut d = vec![S::zero(); y.len()];
                    for w in offsets.windows(2) {
                        let (a, b) = (w[0], w[1]);
                        let inner = super::tensor::dot(&gs[a..b], &y[a..b]);
                        for e in a..b {
                            d[e] = y[e] * (gs[e] - inner);
                        }
                    }
                    accumulate(&mut adj, *scores, Tensor::column(d));
                }
                Op::SegmentWeightedSum { values, weights, offsets } => {
                    let vals = self.value(*values);
                    let w = self.value(*weights);
                    let mut dv = Tensor::zeros(vals.rows(), vals.cols());
                    let mut dw = Tensor::zeros(w.rows(), 1);
                    for i in 0..offsets.len().saturating_sub(1) {
                        let gi = g.row_slice(i);
                        for e in offsets[i]..offsets[i + 1] {
                            let we = w.as_slice()[e];
                            for (t, &v) in dv.row_slice_mut(e).iter_mut().zip(gi) {
                                *t += we * v;
                            }
                            dw.as_mut_slice()[e] = super::tensor::dot(vals.row_slice(e), gi);
                        }
                    }
                    accumulate(&mut adj, *values, dv);
                    accumulate(&mut adj, *weights, dw);
                }
                Op::Bce { prob, label } => {
                    let p = self.value(*prob).as_slice()[0];
                    let lo = S::of(PROB_CLAMP);
                    let hi = S::one() - lo;
                    let d = if p < lo || p > hi {
                        S::zero()
                    } else {
                        -*label / p + (S::one() - *label) / (S::one() - p)
                    };
                    accumulate(&mut adj, *prob, Tensor::filled(1, 1, d * g.as_slice()[0]));
                }
            }
        }
        Gradients { params }
    }
}

fn accumulate<S: Scalar>(adj: &mut [Option<Tensor<S>>], v: Var, g: Tensor<S>) {
    match &mut adj[v.0] {
        Some(existing) => existing.add_assign(&g).expect("adjoint shapes match node shapes"),
        slot @ None => *slot = Some(g),
    }
}

/// Parameter gradients produced by [`Tape::backward`].
pub struct Gradients<S> {
    params: Vec<(usize, Tensor<S>)>,
}

impl<S: Scalar> Gradients<S> {
    /// Dense gradients, one per parameter, shaped like `params`. Parameters not
    /// touched by the pass get zeros; a parameter registered twice gets the sum.
    pub fn dense(&self, params: &[Tensor<S>]) -> Vec<Tensor<S>> {
        let mut out: Vec<Tensor<S>> = params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        for (i, g) in &self.params {
            out[*i].add_assign(g).expect("parameter gradient shape");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_gradient() {
        let w = Tensor::filled(1, 1, 3.0);
        let mut tape = Tape::new();
        let x = tape.param(0, &w);
        let y = tape.mul(x, x).unwrap();
        let g = tape.backward(y).dense(&[w]);
        assert_eq!(g[0].as_slice(), &[6.0]);
    }

    #[test]
    fn untouched_parameter_has_zero_gradient() {
        let a = Tensor::filled(1, 1, 2.0);
        let unused = Tensor::filled(2, 3, 1.0);
        let mut tape = Tape::new();
        let x = tape.param(0, &a);
        let y = tape.relu(x);
        let g = tape.backward(y).dense(&[a, unused]);
        assert_eq!(g[0].as_slice(), &[1.0]);
        assert_eq!(g[1], Tensor::zeros(2, 3));
    }

    #[test]
    fn segment_ops() {
        let mut tape = Tape::<f64>::new();
        let offsets: Arc<[usize]> = Arc::from(vec![0, 2, 2, 3]);
        let s = tape.constant(Tensor::column(vec![0.0, 3.0f64.ln(), 5.0]));
        let p = tape.segment_softmax(s, offsets.clone()).unwrap();
        let pv = tape.value(p).as_slice().to_vec();
        assert!((pv[0] - 0.25).abs() < 1e-15 && (pv[1] - 0.75).abs() < 1e-15);
        assert_eq!(pv[2], 1.0);

        let src = tape.constant(Tensor::from_f64(3, 2, &[1., 2., 3., 4., 5., 6.]).unwrap());
        let rows = tape.gather_rows(src, Arc::from(vec![2, 0, 1])).unwrap();
        assert_eq!(tape.value(rows).as_slice(), &[5., 6., 1., 2., 3., 4.]);
        let sum = tape.segment_weighted_sum(rows, p, offsets).unwrap();
        let v = tape.value(sum);
        assert_eq!(v.shape(), (3, 2));
        assert!((v[(0, 0)] - (0.25 * 5.0 + 0.75 * 1.0)).abs() < 1e-15);
        assert_eq!(v.row_slice(1), &[0.0, 0.0]);
        assert_eq!(v.row_slice(2), &[3.0, 4.0]);
    }

    #[test]
    fn lerp_endpoints_are_exact() {
        let mut tape = Tape::<f64>::new();
        let one = tape.constant(Tensor::filled(1, 2, 1.0));
        let zero = tape.constant(Tensor::zeros(1, 2));
        let a = tape.constant(Tensor::row(vec![0.1, 0.7]));
        let b = tape.constant(Tensor::row(vec![-3.3, 9.1]));
        let x = tape.lerp(one, a, b).unwrap();
        let y = tape.lerp(zero, a, b).unwrap();
        assert_eq!(tape.value(x), tape.value(a));
        assert_eq!(tape.value(y), tape.value(b));
    }

    #[test]
    fn bce_gradient_is_zero_when_clamped() {
        let p = Tensor::filled(1, 1, 1.0);
        let mut tape = Tape::<f64>::new();
        let x = tape.param(0, &p);
        let l = tape.bce(x, 0.0).unwrap();
        assert_abs_diff_eq!(tape.value(l).as_slice()[0], 27.63104323789336, epsilon = 1e-9);
        let g = tape.backward(l).dense(&[p]);
        assert_eq!(g[0].as_slice(), &[0.0]);
    }
}
