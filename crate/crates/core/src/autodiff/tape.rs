//! Recording tape with exact reverse-mode adjoints.
//!
//! Every operation evaluates eagerly, appends a node holding its output and
//! whatever the adjoint needs, and returns a [`Var`] handle. A backward pass
//! walks the nodes in exact reverse order of recording.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU32, Ordering};

use rand::Rng;

use super::tensor::{matmul_nt_into, matmul_tn_into};
use super::{ParamGrads, ParamId, ParameterSet, Segments, Tensor};
use crate::{Error, Result};

static NEXT_TAPE: AtomicU32 = AtomicU32::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Var {
    tape: u32,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    GatherRows(usize, Arc<[usize]>),
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    MeanOf(Vec<usize>),
    AddBias(usize, usize),
    Add(usize, usize),
    Mul(usize, usize),
    Affine(usize, f64),
    MulScalar(usize, usize),
    MulCol(usize, usize),
    LeakyRelu(usize, f64),
    Relu(usize),
    Clamp(usize, f64, f64),
    Sigmoid(usize),
    SegmentSoftmax(usize, Arc<Segments>),
    SegmentWeightedSum(usize, usize, Arc<Segments>),
    Dropout(usize, Vec<f64>),
    RowDot(usize, usize),
    Sum(usize),
    BceWithLogits(usize, Vec<f64>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
    param: Option<ParamId>,
}

/// Adjoints of every gradient-requiring leaf, from one backward pass.
#[derive(Debug, Clone, Default)]
pub struct GradMap {
    tape: u32,
    leaves: BTreeMap<usize, Tensor>,
    params: Vec<(ParamId, usize)>,
}

impl GradMap {
    /// Gradient of `v`, if `v` is a gradient-requiring leaf of this tape.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        if v.tape != self.tape {
            return None;
        }
        self.leaves.get(&v.index)
    }

    /// Adds parameter-leaf gradients into `grads`.
    pub fn accumulate_into(&self, grads: &mut ParamGrads) {
        for &(id, node) in &self.params {
            if let Some(g) = self.leaves.get(&node) {
                grads.slot_mut(id).add_assign(g);
            }
        }
    }
}

#[derive(Debug)]
pub struct Tape {
    id: u32,
    nodes: Vec<Node>,
    param_vars: BTreeMap<ParamId, usize>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    f64::max(z, 0.0) + libm::log1p(libm::exp(-libm::fabs(z)))
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch { op, left: a.shape(), right: b.shape() });
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Tape { id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed), nodes: Vec::new(), param_vars: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn idx(&self, v: Var) -> Result<usize> {
        if v.tape != self.id || v.index >= self.nodes.len() {
            return Err(Error::ForeignVariable(v.index));
        }
        Ok(v.index)
    }

    fn val(&self, i: usize) -> &Tensor {
        &self.nodes[i].value
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, inputs: &[usize]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        let needs_grad = inputs.iter().any(|&i| self.nodes[i].needs_grad);
        self.nodes.push(Node { value, op, needs_grad, param: None });
        Ok(Var { tape: self.id, index: self.nodes.len() - 1 })
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.index].value
    }

    /// Records an input tensor; `requires_grad` leaves receive gradients.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite("leaf"));
        }
        self.nodes.push(Node { value, op: Op::Leaf, needs_grad: requires_grad, param: None });
        Ok(Var { tape: self.id, index: self.nodes.len() - 1 })
    }

    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, false)
    }

    /// Records parameter `id` as a gradient-requiring leaf. Repeated calls
    /// return the same variable.
    pub fn param(&mut self, params: &ParameterSet, id: ParamId) -> Result<Var> {
        if let Some(&i) = self.param_vars.get(&id) {
            return Ok(Var { tape: self.id, index: i });
        }
        let v = self.leaf(params.get(id).clone(), true)?;
        self.nodes[v.index].param = Some(id);
        self.param_vars.insert(id, v.index);
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let out = self.val(ia).matmul(self.val(ib))?;
        self.push("matmul", out, Op::MatMul(ia, ib), &[ia, ib])
    }

    /// `out[r] = a[index[r]]`.
    pub fn gather_rows(&mut self, a: Var, index: Arc<[usize]>) -> Result<Var> {
        let ia = self.idx(a)?;
        let src = self.val(ia);
        let cols = src.cols();
        let mut out = Tensor::zeros(index.len(), cols);
        for (r, &s) in index.iter().enumerate() {
            if s >= src.rows() {
                return Err(Error::ShapeMismatch { op: "gather_rows", left: src.shape(), right: [s, 0] });
            }
            out.row_mut(r).copy_from_slice(src.row(s));
        }
        self.push("gather_rows", out, Op::GatherRows(ia, index), &[ia])
    }

    /// Stacks tensors vertically.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let idx: Vec<usize> = parts.iter().map(|&v| self.idx(v)).collect::<Result<_>>()?;
        let cols = idx.first().map_or(0, |&i| self.val(i).cols());
        let mut data = Vec::new();
        let mut rows = 0;
        for &i in &idx {
            let t = self.val(i);
            if t.cols() != cols {
                return Err(Error::ShapeMismatch { op: "concat_rows", left: [rows, cols], right: t.shape() });
            }
            rows += t.rows();
            data.extend_from_slice(t.as_slice());
        }
        let out = Tensor::from_vec(rows, cols, data)?;
        self.push("concat_rows", out, Op::ConcatRows(idx.clone()), &idx)
    }

    /// Concatenates along the feature (column) axis.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let idx: Vec<usize> = parts.iter().map(|&v| self.idx(v)).collect::<Result<_>>()?;
        let rows = idx.first().map_or(0, |&i| self.val(i).rows());
        let total: usize = idx.iter().map(|&i| self.val(i).cols()).sum();
        let mut out = Tensor::zeros(rows, total);
        let mut at = 0;
        for &i in &idx {
            let t = self.val(i);
            if t.rows() != rows {
                return Err(Error::ShapeMismatch { op: "concat_cols", left: [rows, total], right: t.shape() });
            }
            for r in 0..rows {
                out.row_mut(r)[at..at + t.cols()].copy_from_slice(t.row(r));
            }
            at += t.cols();
        }
        self.push("concat_cols", out, Op::ConcatCols(idx.clone()), &idx)
    }

    /// Elementwise mean of same-shape tensors (head averaging).
    pub fn mean_of(&mut self, parts: &[Var]) -> Result<Var> {
        let idx: Vec<usize> = parts.iter().map(|&v| self.idx(v)).collect::<Result<_>>()?;
        let first = *idx.first().ok_or(Error::invalid("mean_of", "no inputs"))?;
        let mut out = self.val(first).clone();
        for &i in &idx[1..] {
            same_shape("mean_of", &out, self.val(i))?;
            out.add_assign(self.val(i));
        }
        let k = idx.len() as f64;
        out.as_mut_slice().iter_mut().for_each(|v| *v /= k);
        self.push("mean_of", out, Op::MeanOf(idx.clone()), &idx)
    }

    /// Adds a `1×c` row to every row of an `n×c` tensor.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(bias)?);
        let (x, b) = (self.val(ia), self.val(ib));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Error::ShapeMismatch { op: "add_bias", left: x.shape(), right: b.shape() });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, bv) in out.row_mut(r).iter_mut().zip(b.as_slice()) {
                *o += bv;
            }
        }
        self.push("add_bias", out, Op::AddBias(ia, ib), &[ia, ib])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        same_shape("add", self.val(ia), self.val(ib))?;
        let mut out = self.val(ia).clone();
        out.add_assign(self.val(ib));
        self.push("add", out, Op::Add(ia, ib), &[ia, ib])
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        same_shape("mul", self.val(ia), self.val(ib))?;
        let data = self.val(ia).as_slice().iter().zip(self.val(ib).as_slice()).map(|(x, y)| x * y).collect();
        let [r, c] = self.val(ia).shape();
        let out = Tensor::from_vec(r, c, data)?;
        self.push("mul", out, Op::Mul(ia, ib), &[ia, ib])
    }

    /// `scale · a + shift`, elementwise.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Result<Var> {
        let ia = self.idx(a)?;
        let out = self.val(ia).map(|x| scale * x + shift);
        self.push("affine", out, Op::Affine(ia, scale), &[ia])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.affine(a, factor, 0.0)
    }

    /// Multiplies every element of `a` by the `1×1` tensor `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        let (ia, is) = (self.idx(a)?, self.idx(s)?);
        if self.val(is).shape() != [1, 1] {
            return Err(Error::ShapeMismatch { op: "mul_scalar", left: self.val(ia).shape(), right: self.val(is).shape() });
        }
        let k = self.val(is).item();
        let out = self.val(ia).map(|x| x * k);
        self.push("mul_scalar", out, Op::MulScalar(ia, is), &[ia, is])
    }

    /// Scales row `r` of an `n×c` tensor by `col[r]` of an `n×1` tensor.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let (ia, ic) = (self.idx(a)?, self.idx(col)?);
        let (x, c) = (self.val(ia), self.val(ic));
        if c.cols() != 1 || c.rows() != x.rows() {
            return Err(Error::ShapeMismatch { op: "mul_col", left: x.shape(), right: c.shape() });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            let k = c.as_slice()[r];
            out.row_mut(r).iter_mut().for_each(|v| *v *= k);
        }
        self.push("mul_col", out, Op::MulCol(ia, ic), &[ia, ic])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        let ia = self.idx(a)?;
        let out = self.val(ia).map(|x| leaky(x, slope));
        self.push("leaky_relu", out, Op::LeakyRelu(ia, slope), &[ia])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let ia = self.idx(a)?;
        let out = self.val(ia).map(|x| f64::max(x, 0.0));
        self.push("relu", out, Op::Relu(ia), &[ia])
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let ia = self.idx(a)?;
        let out = self.val(ia).map(|x| x.clamp(lo, hi));
        self.push("clamp", out, Op::Clamp(ia, lo, hi), &[ia])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let ia = self.idx(a)?;
        let out = self.val(ia).map(sigmoid);
        self.push("sigmoid", out, Op::Sigmoid(ia), &[ia])
    }

    /// Softmax of an `E×1` logit column within each segment. The per-segment
    /// maximum is subtracted before exponentiation.
    pub fn segment_softmax(&mut self, logits: Var, seg: &Arc<Segments>) -> Result<Var> {
        let il = self.idx(logits)?;
        let z = self.val(il);
        if z.shape() != [seg.edge_count(), 1] {
            return Err(Error::ShapeMismatch { op: "segment_softmax", left: z.shape(), right: [seg.edge_count(), 1] });
        }
        let z = z.as_slice();
        let mut out = vec![0.0; z.len()];
        for s in 0..seg.segment_count() {
            let range = seg.range(s);
            if range.is_empty() {
                return Err(Error::EmptySegment { segment: s });
            }
            let max = z[range.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for e in range.clone() {
                out[e] = libm::exp(z[e] - max);
                total += out[e];
            }
            out[range].iter_mut().for_each(|v| *v /= total);
        }
        let out = Tensor::from_vec(z.len(), 1, out)?;
        self.push("segment_softmax", out, Op::SegmentSoftmax(il, seg.clone()), &[il])
    }

    /// `out[i] = Σ_{e ∈ segment i} weights[e] · values[source(e)]`.
    pub fn segment_weighted_sum(&mut self, weights: Var, values: Var, seg: &Arc<Segments>) -> Result<Var> {
        let (iw, iv) = (self.idx(weights)?, self.idx(values)?);
        let (w, x) = (self.val(iw), self.val(iv));
        if w.shape() != [seg.edge_count(), 1] || x.rows() != seg.source_count() {
            return Err(Error::ShapeMismatch { op: "segment_weighted_sum", left: w.shape(), right: x.shape() });
        }
        let mut out = Tensor::zeros(seg.segment_count(), x.cols());
        for s in 0..seg.segment_count() {
            for e in seg.range(s) {
                let we = w.as_slice()[e];
                let src = x.row(seg.sources()[e]);
                for (o, v) in out.row_mut(s).iter_mut().zip(src) {
                    *o += we * v;
                }
            }
        }
        self.push("segment_weighted_sum", out, Op::SegmentWeightedSum(iw, iv, seg.clone()), &[iw, iv])
    }

    /// Inverted dropout: each entry survives with probability `1 - rate` and
    /// is scaled by `1 / (1 - rate)`. Without an rng, or with `rate == 0`, the
    /// input is returned unchanged.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, rate: f64, rng: Option<&mut R>) -> Result<Var> {
        let ia = self.idx(a)?;
        let Some(rng) = rng else { return Ok(a) };
        if rate <= 0.0 {
            return Ok(a);
        }
        if rate >= 1.0 {
            return Err(Error::invalid("dropout", "rate must be below 1"));
        }
        let keep = 1.0 - rate;
        let mask: Vec<f64> =
            (0..self.val(ia).len()).map(|_| if rng.random_bool(keep) { 1.0 / keep } else { 0.0 }).collect();
        let mut out = self.val(ia).clone();
        out.as_mut_slice().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
        self.push("dropout", out, Op::Dropout(ia, mask), &[ia])
    }

    /// Row-wise dot product of two `n×c` tensors, as an `n×1` column.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let (x, y) = (self.val(ia), self.val(ib));
        same_shape("row_dot", x, y)?;
        let data = (0..x.rows()).map(|r| x.row(r).iter().zip(y.row(r)).map(|(p, q)| p * q).sum()).collect();
        let out = Tensor::from_vec(x.rows(), 1, data)?;
        self.push("row_dot", out, Op::RowDot(ia, ib), &[ia, ib])
    }

    /// Sum of all elements, as `1×1`.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let ia = self.idx(a)?;
        let out = Tensor::scalar(self.val(ia).as_slice().iter().sum());
        self.push("sum", out, Op::Sum(ia), &[ia])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n as f64)
    }

    /// Mean binary cross-entropy of `sigmoid(logits)` against 0/1 labels,
    /// evaluated in the overflow-free logit form.
    pub fn bce_with_logits(&mut self, logits: Var, labels: Vec<f64>) -> Result<Var> {
        let il = self.idx(logits)?;
        let z = self.val(il);
        if z.cols() != 1 || z.rows() != labels.len() || labels.is_empty() {
            return Err(Error::ShapeMismatch { op: "bce_with_logits", left: z.shape(), right: [labels.len(), 1] });
        }
        let total: f64 = z.as_slice().iter().zip(&labels).map(|(&z, &y)| softplus(z) - y * z).sum();
        let out = Tensor::scalar(total / labels.len() as f64);
        self.push("bce_with_logits", out, Op::BceWithLogits(il, labels), &[il])
    }

    /// Reverse pass from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<GradMap> {
        let il = self.idx(loss)?;
        if self.val(il).shape() != [1, 1] {
            return Err(Error::NonScalarLoss(self.val(il).shape()));
        }
        if !self.nodes[il].needs_grad {
            return Err(Error::DetachedGraph);
        }
        let mut adj: Vec<Option<Tensor>> = (0..=il).map(|_| None).collect();
        adj[il] = Some(Tensor::scalar(1.0));
        let mut map = GradMap { tape: self.id, ..GradMap::default() };

        for i in (0..=il).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let send = |j: usize, t: Tensor, adj: &mut Vec<Option<Tensor>>| {
                if !self.nodes[j].needs_grad {
                    return;
                }
                match &mut adj[j] {
                    Some(a) => a.add_assign(&t),
                    slot => *slot = Some(t),
                }
            };
            match &node.op {
                Op::Leaf => {
                    if let Some(p) = node.param {
                        map.params.push((p, i));
                    }
                    map.leaves.insert(i, g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let (x, y) = (self.val(*a), self.val(*b));
                    let (m, k, n) = (x.rows(), x.cols(), y.cols());
                    if self.nodes[*a].needs_grad {
                        let mut ga = Tensor::zeros(m, k);
                        matmul_nt_into(g.as_slice(), y.as_slice(), ga.as_mut_slice(), m, n, k);
                        send(*a, ga, &mut adj);
                    }
                    if self.nodes[*b].needs_grad {
                        let mut gb = Tensor::zeros(k, n);
                        matmul_tn_into(x.as_slice(), g.as_slice(), gb.as_mut_slice(), m, k, n);
                        send(*b, gb, &mut adj);
                    }
                }
                Op::GatherRows(a, index) => {
                    let src = self.val(*a);
                    let mut ga = Tensor::zeros(src.rows(), src.cols());
                    for (r, &s) in index.iter().enumerate() {
                        for (o, v) in ga.row_mut(s).iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    send(*a, ga, &mut adj);
                }
                Op::ConcatRows(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let t = self.val(p);
                        let piece = g.as_slice()[at * t.cols()..(at + t.rows()) * t.cols()].to_vec();
                        at += t.rows();
                        send(p, Tensor::from_vec(t.rows(), t.cols(), piece)?, &mut adj);
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let t = self.val(p);
                        let mut gp = Tensor::zeros(t.rows(), t.cols());
                        for r in 0..t.rows() {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[at..at + t.cols()]);
                        }
                        at += t.cols();
                        send(p, gp, &mut adj);
                    }
                }
                Op::MeanOf(parts) => {
                    let k = parts.len() as f64;
                    let share = g.map(|v| v / k);
                    for &p in parts {
                        send(p, share.clone(), &mut adj);
                    }
                }
                Op::AddBias(a, b) => {
                    let mut gb = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, v) in gb.as_mut_slice().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    send(*b, gb, &mut adj);
                    send(*a, g, &mut adj);
                }
                Op::Add(a, b) => {
                    send(*b, g.clone(), &mut adj);
                    send(*a, g, &mut adj);
                }
                Op::Mul(a, b) => {
                    let (x, y) = (self.val(*a), self.val(*b));
                    let ga = Tensor::from_vec(g.rows(), g.cols(), g.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p * q).collect())?;
                    let gb = Tensor::from_vec(g.rows(), g.cols(), g.as_slice().iter().zip(x.as_slice()).map(|(p, q)| p * q).collect())?;
                    send(*a, ga, &mut adj);
                    send(*b, gb, &mut adj);
                }
                Op::Affine(a, scale) => {
                    let s = *scale;
                    send(*a, g.map(|v| v * s), &mut adj);
                }
                Op::MulScalar(a, s) => {
                    let k = self.val(*s).item();
                    let x = self.val(*a);
                    let gs: f64 = g.as_slice().iter().zip(x.as_slice()).map(|(p, q)| p * q).sum();
                    send(*s, Tensor::scalar(gs), &mut adj);
                    send(*a, g.map(|v| v * k), &mut adj);
                }
                Op::MulCol(a, c) => {
                    let (x, col) = (self.val(*a), self.val(*c));
                    let mut gc = Tensor::zeros(col.rows(), 1);
                    let mut ga = g.clone();
                    for r in 0..x.rows() {
                        gc.as_mut_slice()[r] = g.row(r).iter().zip(x.row(r)).map(|(p, q)| p * q).sum();
                        let k = col.as_slice()[r];
                        ga.row_mut(r).iter_mut().for_each(|v| *v *= k);
                    }
                    send(*c, gc, &mut adj);
                    send(*a, ga, &mut adj);
                }
                Op::LeakyRelu(a, slope) => {
                    let x = self.val(*a);
                    let mut ga = g;
                    ga.as_mut_slice().iter_mut().zip(x.as_slice()).for_each(|(v, &xv)| {
                        if xv < 0.0 {
                            *v *= slope;
                        }
                    });
                    send(*a, ga, &mut adj);
                }
                Op::Relu(a) => {
                    let x = self.val(*a);
                    let mut ga = g;
                    ga.as_mut_slice().iter_mut().zip(x.as_slice()).for_each(|(v, &xv)| {
                        if xv <= 0.0 {
                            *v = 0.0;
                        }
                    });
                    send(*a, ga, &mut adj);
                }
                Op::Clamp(a, lo, hi) => {
                    let x = self.val(*a);
                    let mut ga = g;
                    ga.as_mut_slice().iter_mut().zip(x.as_slice()).for_each(|(v, &xv)| {
                        if xv <= *lo || xv >= *hi {
                            *v = 0.0;
                        }
                    });
                    send(*a, ga, &mut adj);
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let mut ga = g;
                    ga.as_mut_slice().iter_mut().zip(y.as_slice()).for_each(|(v, &s)| *v *= s * (1.0 - s));
                    send(*a, ga, &mut adj);
                }
                Op::SegmentSoftmax(a, seg) => {
                    let y = node.value.as_slice();
                    let gy = g.as_slice();
                    let mut ga = vec![0.0; y.len()];
                    for s in 0..seg.segment_count() {
                        let range = seg.range(s);
                        let dot: f64 = range.clone().map(|e| y[e] * gy[e]).sum();
                        for e in range {
                            ga[e] = y[e] * (gy[e] - dot);
                        }
                    }
                    send(*a, Tensor::from_vec(y.len(), 1, ga)?, &mut adj);
                }
                Op::SegmentWeightedSum(w, x, seg) => {
                    let (wv, xv) = (self.val(*w), self.val(*x));
                    let mut gw = Tensor::zeros(wv.rows(), 1);
                    let mut gx = Tensor::zeros(xv.rows(), xv.cols());
                    for s in 0..seg.segment_count() {
                        let gs = g.row(s);
                        for e in seg.range(s) {
                            let src = seg.sources()[e];
                            gw.as_mut_slice()[e] = gs.iter().zip(xv.row(src)).map(|(p, q)| p * q).sum();
                            let we = wv.as_slice()[e];
                            for (o, v) in gx.row_mut(src).iter_mut().zip(gs) {
                                *o += we * v;
                            }
                        }
                    }
                    send(*w, gw, &mut adj);
                    send(*x, gx, &mut adj);
                }
                Op::Dropout(a, mask) => {
                    let mut ga = g;
                    ga.as_mut_slice().iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
                    send(*a, ga, &mut adj);
                }
                Op::RowDot(a, b) => {
                    let (x, y) = (self.val(*a), self.val(*b));
                    let mut ga = y.clone();
                    let mut gb = x.clone();
                    for r in 0..x.rows() {
                        let k = g.as_slice()[r];
                        ga.row_mut(r).iter_mut().for_each(|v| *v *= k);
                        gb.row_mut(r).iter_mut().for_each(|v| *v *= k);
                    }
                    send(*a, ga, &mut adj);
                    send(*b, gb, &mut adj);
                }
                Op::Sum(a) => {
                    let t = self.val(*a);
                    send(*a, Tensor::filled(t.rows(), t.cols(), g.item()), &mut adj);
                }
                Op::BceWithLogits(a, labels) => {
                    let z = self.val(*a);
                    let k = g.item() / labels.len() as f64;
                    let data = z.as_slice().iter().zip(labels).map(|(&z, &y)| k * (sigmoid(z) - y)).collect();
                    send(*a, Tensor::from_vec(z.rows(), 1, data)?, &mut adj);
                }
            }
        }
        Ok(map)
    }

    /// Backward pass adding parameter gradients into `grads`.
    pub fn backward_into(&self, loss: Var, grads: &mut ParamGrads) -> Result<()> {
        self.backward(loss)?.accumulate_into(grads);
        Ok(())
    }
}
