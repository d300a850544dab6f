//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Graph`] records every primitive applied during a forward pass. Nodes
//! are appended in evaluation order, so the tape itself is a topological
//! order and the backward pass walks it once in reverse. Gradients flowing
//! into a node from several consumers are summed.

use std::collections::BTreeMap;

use crate::error::{Result, TensorError};
use crate::params::{ParamId, ParamStore};
use crate::tensor::{gelu, gelu_grad, log_softmax_rows, sigmoid, softmax_rows, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    AddCol(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    ScaleBy(Var, Var),
    MulConst(Var, Tensor),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize, usize),
    SliceRows(Var, usize, usize),
    GatherRows(Var, Vec<usize>),
    GatherEntries(Var, Vec<(usize, usize)>),
    MeanRowGroups(Var, Vec<(usize, usize)>),
    Sum(Var),
    SumCols(Var),
    Sigmoid(Var),
    Tanh(Var),
    Gelu(Var),
    Log(Var),
    Exp(Var),
    Clamp(Var, f64, f64),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    LayerNormRows(Var, f64),
    CrossEntropyRows(Var, Vec<usize>),
    BceWithLogits(Var, Vec<f64>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Recorded computation for one forward pass.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: BTreeMap<ParamId, Var>,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Leaf for a trainable parameter. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).clone(), Op::Param(id));
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul_t(self.value(b))?;
        Ok(self.push(out, Op::MatMulT(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose()?;
        Ok(self.push(out, Op::Transpose(a)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).sub(self.value(b))?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).mul(self.value(b))?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// `a (m×n) + b (1×n)` broadcast over rows.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(b));
        let (m, n) = x.expect_matrix("add_row")?;
        if r.shape() != [1, n] {
            return Err(mismatch("add_row", x, r));
        }
        let mut out = x.clone();
        let rd = r.data();
        for i in 0..m {
            for (o, &b) in out.data_mut()[i * n..(i + 1) * n].iter_mut().zip(rd) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, b)))
    }

    /// `a (m×n) + b (m×1)` broadcast over columns.
    pub fn add_col(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, c) = (self.value(a), self.value(b));
        let (m, n) = x.expect_matrix("add_col")?;
        if c.shape() != [m, 1] {
            return Err(mismatch("add_col", x, c));
        }
        let mut out = x.clone();
        for i in 0..m {
            let b = c.data()[i];
            for o in &mut out.data_mut()[i * n..(i + 1) * n] {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddCol(a, b)))
    }

    /// `a (m×n) ⊙ b (1×n)` broadcast over rows.
    pub fn mul_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(b));
        let (m, n) = x.expect_matrix("mul_row")?;
        if r.shape() != [1, n] {
            return Err(mismatch("mul_row", x, r));
        }
        let mut out = x.clone();
        let rd = r.data();
        for i in 0..m {
            for (o, &b) in out.data_mut()[i * n..(i + 1) * n].iter_mut().zip(rd) {
                *o *= b;
            }
        }
        Ok(self.push(out, Op::MulRow(a, b)))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let out = self.value(a).scale(k);
        self.push(out, Op::Scale(a, k))
    }

    pub fn add_scalar(&mut self, a: Var, k: f64) -> Var {
        let out = self.value(a).map(|x| x + k);
        self.push(out, Op::AddScalar(a))
    }

    /// Multiplies `a` by the `1×1` node `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        let sv = self.value(s);
        if sv.len() != 1 {
            return Err(TensorError::ShapeMismatch {
                op: "scale_by",
                left: self.value(a).shape().to_vec(),
                right: sv.shape().to_vec(),
            });
        }
        let out = self.value(a).scale(sv.item());
        Ok(self.push(out, Op::ScaleBy(a, s)))
    }

    /// Elementwise product with a constant tensor (dropout masks).
    pub fn mul_const(&mut self, a: Var, mask: Tensor) -> Result<Var> {
        let out = self.value(a).mul(&mask)?;
        Ok(self.push(out, Op::MulConst(a, mask)))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or(TensorError::InvalidShape { shape: vec![], len: 0 })?;
        let m = self.value(*first).expect_matrix("concat_cols")?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.value(p).expect_matrix("concat_cols")?;
            if r != m {
                return Err(mismatch("concat_cols", self.value(*first), self.value(p)));
            }
            widths.push(c);
        }
        let n: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[i * w..(i + 1) * w]);
            }
        }
        let out = Tensor::matrix(m, n, out)?;
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or(TensorError::InvalidShape { shape: vec![], len: 0 })?;
        let n = self.value(*first).expect_matrix("concat_rows")?.1;
        let mut m = 0;
        let mut out = Vec::new();
        for &p in parts {
            let (r, c) = self.value(p).expect_matrix("concat_rows")?;
            if c != n {
                return Err(mismatch("concat_rows", self.value(*first), self.value(p)));
            }
            m += r;
            out.extend_from_slice(self.value(p).data());
        }
        let out = Tensor::matrix(m, n, out)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let out = self.value(a).slice_cols(start, end)?;
        Ok(self.push(out, Op::SliceCols(a, start, end)))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let out = self.value(a).slice_rows(start, end)?;
        Ok(self.push(out, Op::SliceRows(a, start, end)))
    }

    /// Row lookup, the embedding primitive.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let x = self.value(a);
        let (m, n) = x.expect_matrix("gather_rows")?;
        let mut out = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            if i >= m {
                return Err(TensorError::OutOfRange {
                    op: "gather_rows",
                    index: i,
                    len: m,
                });
            }
            out.extend_from_slice(x.row_slice(i));
        }
        let out = Tensor::matrix(idx.len(), n, out)?;
        Ok(self.push(out, Op::GatherRows(a, idx.to_vec())))
    }

    /// Picks `a[i, j]` for each pair into a `k×1` column.
    pub fn gather_entries(&mut self, a: Var, pairs: &[(usize, usize)]) -> Result<Var> {
        let x = self.value(a);
        let (m, n) = x.expect_matrix("gather_entries")?;
        let mut out = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            if i >= m || j >= n {
                return Err(TensorError::OutOfRange {
                    op: "gather_entries",
                    index: i.max(j),
                    len: m.min(n),
                });
            }
            out.push(x.get(i, j));
        }
        let out = Tensor::matrix(pairs.len(), 1, out)?;
        Ok(self.push(out, Op::GatherEntries(a, pairs.to_vec())))
    }

    /// One output row per half-open `[start, end)` group: the mean of those rows.
    pub fn mean_row_groups(&mut self, a: Var, groups: &[(usize, usize)]) -> Result<Var> {
        let x = self.value(a);
        let (m, n) = x.expect_matrix("mean_row_groups")?;
        let mut out = vec![0.0; groups.len() * n];
        for (g, &(s, e)) in groups.iter().enumerate() {
            if s >= e || e > m {
                return Err(TensorError::OutOfRange {
                    op: "mean_row_groups",
                    index: e,
                    len: m,
                });
            }
            let inv = 1.0 / (e - s) as f64;
            let dst = &mut out[g * n..(g + 1) * n];
            for r in s..e {
                for (d, &v) in dst.iter_mut().zip(x.row_slice(r)) {
                    *d += v;
                }
            }
            for d in dst.iter_mut() {
                *d *= inv;
            }
        }
        let out = Tensor::matrix(groups.len(), n, out)?;
        Ok(self.push(out, Op::MeanRowGroups(a, groups.to_vec())))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Row sums as an `m×1` column.
    pub fn sum_cols(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let (m, n) = x.expect_matrix("sum_cols")?;
        let out: Vec<f64> = (0..m).map(|i| x.data()[i * n..(i + 1) * n].iter().sum()).collect();
        let out = Tensor::matrix(m, 1, out)?;
        Ok(self.push(out, Op::SumCols(a)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(gelu);
        self.push(out, Op::Gelu(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::ln);
        self.push(out, Op::Log(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::exp);
        self.push(out, Op::Exp(a))
    }

    /// Clamp to `[lo, hi]`; the gradient is zero outside the open interval.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let out = self.value(a).map(|x| x.clamp(lo, hi));
        self.push(out, Op::Clamp(a, lo, hi))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let out = softmax_rows(self.value(a))?;
        Ok(self.push(out, Op::SoftmaxRows(a)))
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Result<Var> {
        let out = log_softmax_rows(self.value(a))?;
        Ok(self.push(out, Op::LogSoftmaxRows(a)))
    }

    /// Per-row standardization `(x − mean) / sqrt(var + eps)` without affine terms.
    pub fn layer_norm_rows(&mut self, a: Var, eps: f64) -> Result<Var> {
        let x = self.value(a);
        let (m, n) = x.expect_matrix("layer_norm_rows")?;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = x.row_slice(i);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for (o, &v) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                *o = (v - mean) * inv;
            }
        }
        let out = Tensor::matrix(m, n, out)?;
        Ok(self.push(out, Op::LayerNormRows(a, eps)))
    }

    /// Summed token cross-entropy: `Σ_i −log softmax(logits_i)[targets_i]`.
    pub fn cross_entropy_rows(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let x = self.value(logits);
        let (m, n) = x.expect_matrix("cross_entropy_rows")?;
        if targets.len() != m {
            return Err(TensorError::ShapeMismatch {
                op: "cross_entropy_rows",
                left: x.shape().to_vec(),
                right: vec![targets.len()],
            });
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= n) {
            return Err(TensorError::OutOfRange {
                op: "cross_entropy_rows",
                index: t,
                len: n,
            });
        }
        let ls = log_softmax_rows(x)?;
        let loss: f64 = targets.iter().enumerate().map(|(i, &t)| -ls.get(i, t)).sum();
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropyRows(logits, targets.to_vec())))
    }

    /// Summed binary cross-entropy on logits against targets in `[0, 1]`.
    pub fn bce_with_logits(&mut self, logits: Var, targets: &[f64]) -> Result<Var> {
        let x = self.value(logits);
        if x.len() != targets.len() {
            return Err(TensorError::ShapeMismatch {
                op: "bce_with_logits",
                left: x.shape().to_vec(),
                right: vec![targets.len()],
            });
        }
        let loss: f64 = x
            .data()
            .iter()
            .zip(targets)
            .map(|(&z, &t)| z.max(0.0) - z * t + (-z.abs()).exp().ln_1p())
            .sum();
        Ok(self.push(Tensor::scalar(loss), Op::BceWithLogits(logits, targets.to_vec())))
    }

    /// Gradient of the scalar `loss` with respect to every parameter in `store`.
    ///
    /// Parameters that never entered the graph get a zero gradient.
    pub fn grad(&self, loss: Var, store: &ParamStore) -> Result<Vec<Tensor>> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(TensorError::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));
        let mut out = store.zeros_like();

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let mut acc = |v: Var, t: Tensor| -> Result<()> {
                match &mut grads[v.0] {
                    Some(existing) => existing.add_assign(&t),
                    slot => {
                        *slot = Some(t);
                        Ok(())
                    }
                }
            };
            let val = |v: Var| &self.nodes[v.0].value;
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    if id.0 < out.len() {
                        out[id.0].add_assign(&g)?;
                    }
                }
                Op::MatMul(a, b) => {
                    acc(*a, g.matmul_t(val(*b))?)?;
                    acc(*b, val(*a).t_matmul(&g)?)?;
                }
                Op::MatMulT(a, b) => {
                    acc(*a, g.matmul(val(*b))?)?;
                    acc(*b, g.t_matmul(val(*a))?)?;
                }
                Op::Transpose(a) => acc(*a, g.transpose()?)?,
                Op::Add(a, b) => {
                    acc(*a, g.clone())?;
                    acc(*b, g)?;
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone())?;
                    acc(*b, g.scale(-1.0))?;
                }
                Op::Mul(a, b) => {
                    acc(*a, g.mul(val(*b))?)?;
                    acc(*b, g.mul(val(*a))?)?;
                }
                Op::AddRow(a, b) => {
                    acc(*b, col_sums(&g))?;
                    acc(*a, g)?;
                }
                Op::AddCol(a, b) => {
                    let (m, n) = (g.rows(), g.cols());
                    let s: Vec<f64> = (0..m).map(|i| g.data()[i * n..(i + 1) * n].iter().sum()).collect();
                    acc(*b, Tensor::matrix(m, 1, s)?)?;
                    acc(*a, g)?;
                }
                Op::MulRow(a, b) => {
                    let x = val(*a);
                    let r = val(*b);
                    let n = g.cols();
                    let mut ga = g.clone();
                    let mut gb = vec![0.0; n];
                    #[allow(clippy::needless_range_loop)]
                    for i in 0..g.rows() {
                        for j in 0..n {
                            let k = i * n + j;
                            ga.data_mut()[k] = g.data()[k] * r.data()[j];
                            gb[j] += g.data()[k] * x.data()[k];
                        }
                    }
                    acc(*a, ga)?;
                    acc(*b, Tensor::row(gb)?)?;
                }
                Op::Scale(a, k) => acc(*a, g.scale(*k))?,
                Op::AddScalar(a) => acc(*a, g)?,
                Op::ScaleBy(a, s) => {
                    let sv = val(*s).item();
                    let gs: f64 = g.data().iter().zip(val(*a).data()).map(|(x, y)| x * y).sum();
                    acc(*s, Tensor::full(val(*s).shape(), gs))?;
                    acc(*a, g.scale(sv))?;
                }
                Op::MulConst(a, mask) => acc(*a, g.mul(mask)?)?,
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for &p in parts {
                        let w = val(p).cols();
                        acc(p, g.slice_cols(start, start + w)?)?;
                        start += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut start = 0;
                    for &p in parts {
                        let h = val(p).rows();
                        acc(p, g.slice_rows(start, start + h)?)?;
                        start += h;
                    }
                }
                Op::SliceCols(a, s, e) => {
                    let x = val(*a);
                    let (m, n) = (x.rows(), x.cols());
                    let w = e - s;
                    let mut ga = Tensor::zeros(&[m, n]);
                    for i in 0..m {
                        ga.data_mut()[i * n + s..i * n + e].copy_from_slice(&g.data()[i * w..(i + 1) * w]);
                    }
                    acc(*a, ga)?;
                }
                Op::SliceRows(a, s, e) => {
                    let x = val(*a);
                    let n = x.cols();
                    let mut ga = Tensor::zeros(x.shape());
                    ga.data_mut()[s * n..e * n].copy_from_slice(g.data());
                    acc(*a, ga)?;
                }
                Op::GatherRows(a, idx) => {
                    let x = val(*a);
                    let n = x.cols();
                    let mut ga = Tensor::zeros(x.shape());
                    for (r, &i) in idx.iter().enumerate() {
                        for (d, &v) in ga.data_mut()[i * n..(i + 1) * n].iter_mut().zip(g.row_slice(r)) {
                            *d += v;
                        }
                    }
                    acc(*a, ga)?;
                }
                Op::GatherEntries(a, pairs) => {
                    let x = val(*a);
                    let n = x.cols();
                    let mut ga = Tensor::zeros(x.shape());
                    for (k, &(i, j)) in pairs.iter().enumerate() {
                        ga.data_mut()[i * n + j] += g.data()[k];
                    }
                    acc(*a, ga)?;
                }
                Op::MeanRowGroups(a, groups) => {
                    let x = val(*a);
                    let n = x.cols();
                    let mut ga = Tensor::zeros(x.shape());
                    for (k, &(s, e)) in groups.iter().enumerate() {
                        let inv = 1.0 / (e - s) as f64;
                        for r in s..e {
                            for (d, &v) in ga.data_mut()[r * n..(r + 1) * n].iter_mut().zip(g.row_slice(k)) {
                                *d += v * inv;
                            }
                        }
                    }
                    acc(*a, ga)?;
                }
                Op::Sum(a) => acc(*a, Tensor::full(val(*a).shape(), g.item()))?,
                Op::SumCols(a) => {
                    let x = val(*a);
                    let n = x.cols();
                    let mut ga = Tensor::zeros(x.shape());
                    for i in 0..x.rows() {
                        let gi = g.data()[i];
                        ga.data_mut()[i * n..(i + 1) * n].fill(gi);
                    }
                    acc(*a, ga)?;
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    acc(*a, g.zip_map(y, "sigmoid", |g, y| g * y * (1.0 - y))?)?;
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    acc(*a, g.zip_map(y, "tanh", |g, y| g * (1.0 - y * y))?)?;
                }
                Op::Gelu(a) => acc(*a, g.zip_map(val(*a), "gelu", |g, x| g * gelu_grad(x))?)?,
                Op::Log(a) => acc(*a, g.zip_map(val(*a), "log", |g, x| g / x)?)?,
                Op::Exp(a) => acc(*a, g.zip_map(&node.value, "exp", |g, y| g * y)?)?,
                Op::Clamp(a, lo, hi) => {
                    let (lo, hi) = (*lo, *hi);
                    acc(
                        *a,
                        g.zip_map(val(*a), "clamp", |g, x| if x > lo && x < hi { g } else { 0.0 })?,
                    )?;
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let n = y.cols();
                    let mut ga = Tensor::zeros(y.shape());
                    for i in 0..y.rows() {
                        let yr = y.row_slice(i);
                        let gr = g.row_slice(i);
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..n {
                            ga.data_mut()[i * n + j] = yr[j] * (gr[j] - dot);
                        }
                    }
                    acc(*a, ga)?;
                }
                Op::LogSoftmaxRows(a) => {
                    let y = &node.value;
                    let n = y.cols();
                    let mut ga = Tensor::zeros(y.shape());
                    for i in 0..y.rows() {
                        let yr = y.row_slice(i);
                        let gr = g.row_slice(i);
                        let gs: f64 = gr.iter().sum();
                        for j in 0..n {
                            ga.data_mut()[i * n + j] = gr[j] - yr[j].exp() * gs;
                        }
                    }
                    acc(*a, ga)?;
                }
                Op::LayerNormRows(a, eps) => {
                    let x = val(*a);
                    let y = &node.value;
                    let n = x.cols();
                    let mut ga = Tensor::zeros(x.shape());
                    for i in 0..x.rows() {
                        let row = x.row_slice(i);
                        let mean = row.iter().sum::<f64>() / n as f64;
                        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                        let inv = 1.0 / (var + eps).sqrt();
                        let yr = y.row_slice(i);
                        let gr = g.row_slice(i);
                        let gmean = gr.iter().sum::<f64>() / n as f64;
                        let gy = gr.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                        for j in 0..n {
                            ga.data_mut()[i * n + j] = inv * (gr[j] - gmean - yr[j] * gy);
                        }
                    }
                    acc(*a, ga)?;
                }
                Op::CrossEntropyRows(a, targets) => {
                    let gl = g.item();
                    let mut ga = softmax_rows(val(*a))?;
                    let n = ga.cols();
                    for (i, &t) in targets.iter().enumerate() {
                        ga.data_mut()[i * n + t] -= 1.0;
                    }
                    acc(*a, ga.scale(gl))?;
                }
                Op::BceWithLogits(a, targets) => {
                    let gl = g.item();
                    let x = val(*a);
                    let data = x
                        .data()
                        .iter()
                        .zip(targets)
                        .map(|(&z, &t)| gl * (sigmoid(z) - t))
                        .collect();
                    acc(*a, Tensor::new(x.shape().to_vec(), data)?)?;
                }
            }
        }
        Ok(out)
    }
}

fn col_sums(g: &Tensor) -> Tensor {
    let n = g.cols();
    let mut s = vec![0.0; n];
    for i in 0..g.rows() {
        for (d, &v) in s.iter_mut().zip(g.row_slice(i)) {
            *d += v;
        }
    }
    Tensor::row(s).expect("non-empty row")
}
