//! Attention layers.
//!
//! Per head, with input rows `h`:
//!
//! ```text
//! z_i = h·W_i          z_j = h·W_j
//! e_ij = LeakyReLU((z_i[i] + b_i)·v_i + (z_j[j] + b_j)·v_j)
//! α_ij = softmax of e_ij over j ∈ N(i)            (attention dropout in training)
//! agg_i = Σ_j α_ij z_j[j]
//! ```
//!
//! A horizontal or plain head returns `σ(agg_i)`. A vertical head fuses in
//! the gated horizontal projection `m_i = f(h_i^H)`: summing the combiner
//! `g(α_ij z_j, m_i) = (1 − ReLU(β))·α_ij z_j + ReLU(β)·m_i` over the `|N(i)|`
//! neighbors gives `σ((1 − ReLU(β))·agg_i + ReLU(β)·|N(i)|·m_i)`.
//!
//! `σ` is LeakyReLU. Hidden layers concatenate heads; final layers average.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_distr::{Distribution, Uniform};

use crate::autodiff::{ParamId, ParameterSet, Segments, Tape, Tensor, Var};
use crate::rng::Rng;
use crate::Result;

/// Tape, parameter values and (in training) the dropout rng for one forward.
pub struct Forward<'a> {
    pub tape: &'a mut Tape,
    pub params: &'a ParameterSet,
    pub rng: Option<&'a mut Rng>,
}

impl Forward<'_> {
    pub fn param(&mut self, id: ParamId) -> Result<Var> {
        self.tape.param(self.params, id)
    }

    pub fn training(&self) -> bool {
        self.rng.is_some()
    }

    pub fn dropout(&mut self, x: Var, rate: f64) -> Result<Var> {
        self.tape.dropout(x, rate, self.rng.as_deref_mut())
    }
}

/// Rows entering a layer.
#[derive(Debug, Clone, Copy)]
pub enum LayerInput<'a> {
    /// One-hot rows given by their hot column: the projection `h·W` is a row
    /// gather of `W`.
    OneHot(&'a Arc<[usize]>),
    Dense(Var),
}

pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let limit = libm::sqrt(6.0 / (rows + cols) as f64);
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot bounds");
    let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    Tensor::from_vec(rows, cols, data).expect("sized")
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w_i: ParamId,
    pub w_j: ParamId,
    pub v_i: ParamId,
    pub v_j: ParamId,
    pub b_i: ParamId,
    pub b_j: ParamId,
}

/// Messages, attention weights and aggregate of one head.
pub struct HeadPass {
    pub messages: Var,
    pub attention: Var,
    pub aggregate: Var,
}

impl HeadParams {
    fn new(params: &mut ParameterSet, prefix: &str, in_dim: usize, out_dim: usize, rng: &mut Rng) -> Result<Self> {
        let mut add = |name: &str, t: Tensor| params.push(format!("{prefix}.{name}"), t);
        Ok(HeadParams {
            w_i: add("w_i", glorot(in_dim, out_dim, rng))?,
            w_j: add("w_j", glorot(in_dim, out_dim, rng))?,
            v_i: add("v_i", glorot(out_dim, 1, rng))?,
            v_j: add("v_j", glorot(out_dim, 1, rng))?,
            b_i: add("b_i", Tensor::zeros(1, out_dim))?,
            b_j: add("b_j", Tensor::zeros(1, out_dim))?,
        })
    }

    fn project(fw: &mut Forward<'_>, input: LayerInput<'_>, w: ParamId) -> Result<Var> {
        let w = fw.param(w)?;
        match input {
            LayerInput::OneHot(cols) => fw.tape.gather_rows(w, cols.clone()),
            LayerInput::Dense(x) => fw.tape.matmul(x, w),
        }
    }

    /// Attention and aggregation over `seg`, whose segments are the receiving
    /// rows and whose sources index the same input rows.
    pub fn run(
        &self,
        fw: &mut Forward<'_>,
        input: LayerInput<'_>,
        seg: &Arc<Segments>,
        slope: f64,
        dropout_attention: f64,
    ) -> Result<HeadPass> {
        let z_i = Self::project(fw, input, self.w_i)?;
        let z_j = Self::project(fw, input, self.w_j)?;
        let b_i = fw.param(self.b_i)?;
        let b_j = fw.param(self.b_j)?;
        let v_i = fw.param(self.v_i)?;
        let v_j = fw.param(self.v_j)?;
        let t = &mut *fw.tape;
        let s_i = t.add_bias(z_i, b_i)?;
        let s_i = t.matmul(s_i, v_i)?;
        let s_j = t.add_bias(z_j, b_j)?;
        let s_j = t.matmul(s_j, v_j)?;
        let targets: Arc<[usize]> = seg.targets().into();
        let sources: Arc<[usize]> = seg.sources().into();
        let left = t.gather_rows(s_i, targets)?;
        let right = t.gather_rows(s_j, sources)?;
        let e = t.add(left, right)?;
        let e = t.leaky_relu(e, slope)?;
        let alpha = t.segment_softmax(e, seg)?;
        let alpha = fw.dropout(alpha, dropout_attention)?;
        let aggregate = fw.tape.segment_weighted_sum(alpha, z_j, seg)?;
        Ok(HeadPass { messages: z_j, attention: alpha, aggregate })
    }
}

/// One multi-head attention layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer {
    pub heads: Vec<HeadParams>,
    pub in_dim: usize,
    pub out_dim: usize,
    /// Final layers average heads; hidden layers concatenate them.
    pub is_final: bool,
}

impl GatLayer {
    pub fn new(
        params: &mut ParameterSet,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        heads: usize,
        is_final: bool,
        rng: &mut Rng,
    ) -> Result<Self> {
        let heads = (0..heads)
            .map(|h| HeadParams::new(params, &format!("{prefix}.head{h}"), in_dim, out_dim, rng))
            .collect::<Result<_>>()?;
        Ok(GatLayer { heads, in_dim, out_dim, is_final })
    }

    /// Width of the layer output.
    pub fn output_dim(&self) -> usize {
        if self.is_final {
            self.out_dim
        } else {
            self.out_dim * self.heads.len()
        }
    }

    pub(crate) fn merge(&self, tape: &mut Tape, heads: &[Var]) -> Result<Var> {
        if heads.len() == 1 {
            return Ok(heads[0]);
        }
        if self.is_final {
            tape.mean_of(heads)
        } else {
            tape.concat_cols(heads)
        }
    }

    /// Plain attention layer: `σ(Σ_j α_ij W_j h_j)` per head, then merge.
    /// Used for horizontal layers and for the plain vertical baseline.
    pub fn forward(
        &self,
        fw: &mut Forward<'_>,
        input: LayerInput<'_>,
        seg: &Arc<Segments>,
        slope: f64,
        dropout_attention: f64,
    ) -> Result<(Var, Vec<Var>)> {
        let mut outs = Vec::with_capacity(self.heads.len());
        let mut attention = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let pass = head.run(fw, input, seg, slope, dropout_attention)?;
            outs.push(fw.tape.leaky_relu(pass.aggregate, slope)?);
            attention.push(pass.attention);
        }
        Ok((self.merge(fw.tape, &outs)?, attention))
    }
}

/// Parameters of the horizontal-to-vertical transform `f` and the fusion
/// weight `β` of one vertical layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub z_h: ParamId,
    pub b_h: ParamId,
    pub v_h: ParamId,
    pub beta: ParamId,
}

impl FusionParams {
    pub fn new(
        params: &mut ParameterSet,
        prefix: &str,
        horizontal_dim: usize,
        out_dim: usize,
        beta_init: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        Ok(FusionParams {
            z_h: params.push(format!("{prefix}.z_h"), glorot(horizontal_dim, out_dim, rng))?,
            b_h: params.push(format!("{prefix}.b_h"), Tensor::zeros(1, out_dim))?,
            v_h: params.push(format!("{prefix}.v_h"), glorot(out_dim, 1, rng))?,
            beta: params.push(format!("{prefix}.beta"), Tensor::scalar(beta_init))?,
        })
    }
}

/// `f`: `x = h·Z + b`, scalar gate `a = LeakyReLU(x·v)`, result `a·x`, row-wise.
pub fn f_transform(tape: &mut Tape, h: Var, z_h: Var, b_h: Var, v_h: Var, slope: f64) -> Result<Var> {
    let x = tape.matmul(h, z_h)?;
    let x = tape.add_bias(x, b_h)?;
    let gate = tape.matmul(x, v_h)?;
    let gate = tape.leaky_relu(gate, slope)?;
    tape.mul_col(x, gate)
}

/// `g`: `m_v·(1 − ReLU(β)) + m_h·ReLU(β)`; with `clamp` the weight is capped at 1.
pub fn g_combine(tape: &mut Tape, m_v: Var, m_h: Var, beta: Var, clamp: bool) -> Result<Var> {
    let weight = if clamp { tape.clamp(beta, 0.0, 1.0)? } else { tape.relu(beta)? };
    let rest = tape.affine(weight, -1.0, 1.0)?;
    let a = tape.mul_scalar(m_v, rest)?;
    let b = tape.mul_scalar(m_h, weight)?;
    tape.add(a, b)
}

/// Vertical layer: attention over the vertical network fused with `f` of the
/// receiving node's horizontal embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct VLayer {
    pub gat: GatLayer,
    pub fusion: FusionParams,
}

impl VLayer {
    /// `degree` is the `N×1` column of segment lengths; `horizontal` the
    /// `N×D_h` rows fed to `f`.
    #[allow(clippy::too_many_arguments)]
    pub fn forward(
        &self,
        fw: &mut Forward<'_>,
        input: LayerInput<'_>,
        seg: &Arc<Segments>,
        degree: Var,
        horizontal: Var,
        slope: f64,
        dropout_attention: f64,
        clamp_beta: bool,
    ) -> Result<(Var, Vec<Var>)> {
        let z_h = fw.param(self.fusion.z_h)?;
        let b_h = fw.param(self.fusion.b_h)?;
        let v_h = fw.param(self.fusion.v_h)?;
        let beta = fw.param(self.fusion.beta)?;
        let m_h = f_transform(fw.tape, horizontal, z_h, b_h, v_h, slope)?;
        let m_h = fw.tape.mul_col(m_h, degree)?;
        let mut outs = Vec::with_capacity(self.gat.heads.len());
        let mut attention = Vec::with_capacity(self.gat.heads.len());
        for head in &self.gat.heads {
            let pass = head.run(fw, input, seg, slope, dropout_attention)?;
            let fused = g_combine(fw.tape, pass.aggregate, m_h, beta, clamp_beta)?;
            outs.push(fw.tape.leaky_relu(fused, slope)?);
            attention.push(pass.attention);
        }
        Ok((self.gat.merge(fw.tape, &outs)?, attention))
    }
}

pub(crate) fn layer_prefix(kind: &str, layer: Option<usize>, depth: usize) -> String {
    match layer {
        Some(k) => format!("{kind}{k}.l{depth}"),
        None => format!("{kind}.l{depth}"),
    }
}
