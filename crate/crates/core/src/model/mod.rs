//! The two-phase attention model.
//!
//! The horizontal sub-model embeds each layer independently from its
//! intra-layer graph. The vertical sub-model attends over the inter-layer
//! graph and fuses in the final horizontal embeddings. Intra-layer links are
//! scored on horizontal embeddings, inter-layer links on vertical ones.

mod config;
mod layers;
mod topology;

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

pub use config::{ModelConfig, ModelVariant};
pub use layers::{f_transform, g_combine, FusionParams, Forward, GatLayer, HeadParams, HeadPass, LayerInput, VLayer};
pub use topology::{LayerTopology, Topology};

use crate::autodiff::{sigmoid, ParameterSet, Segments, Tape, Tensor, Var};
use crate::graph::{FeatureMatrix, PairClass};
use crate::rng::{rng, Rng};
use crate::{Error, Result};

/// Where an attention trace came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Horizontal { layer: usize, depth: usize },
    Vertical { depth: usize },
}

/// Attention weights of one head: entry `e` belongs to segment
/// `segments.targets()[e]` and reads source `segments.sources()[e]`.
#[derive(Debug, Clone)]
pub struct AttentionTrace {
    pub stage: Stage,
    pub head: usize,
    pub segments: Arc<Segments>,
    pub weights: Var,
}

/// Final embeddings of one forward pass, in global node order.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub horizontal: Var,
    pub vertical: Var,
    pub attention: Vec<AttentionTrace>,
}

/// Detached embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingValues {
    pub horizontal: Tensor,
    pub vertical: Tensor,
}

impl EmbeddingValues {
    /// `σ(x_u · x_v)` on the embedding matching `class`.
    pub fn score(&self, class: PairClass, u: usize, v: usize) -> f64 {
        let t = match class {
            PairClass::Intra => &self.horizontal,
            PairClass::Inter => &self.vertical,
        };
        score_edge(t.row(u), t.row(v))
    }
}

/// Link probability `σ(a · b)`.
pub fn score_edge(a: &[f64], b: &[f64]) -> f64 {
    sigmoid(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

#[derive(Debug, Clone)]
pub struct Mpxgat {
    config: ModelConfig,
    params: ParameterSet,
    node_count: usize,
    layer_count: usize,
    feature_dim: usize,
    /// Indexed `[layer][depth]`; a single entry when weights are shared.
    horizontal: Vec<Vec<GatLayer>>,
    vertical: Vec<GatLayer>,
    fusion: Vec<FusionParams>,
    random_horizontal: Option<Tensor>,
}

impl Mpxgat {
    /// Builds a model with Glorot-initialized weights, zero biases and
    /// `β = beta_init`, all drawn from `seed`.
    pub fn new(config: ModelConfig, features: &FeatureMatrix, layer_count: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if layer_count == 0 || features.rows() == 0 {
            return Err(Error::EmptyGraph);
        }
        let node_count = features.rows();
        let feature_dim = features.dim();
        let mut init = rng(seed, "init", 0);
        let mut params = ParameterSet::new();

        let stacks = if config.share_horizontal_weights { 1 } else { layer_count };
        let mut horizontal = Vec::with_capacity(stacks);
        for k in 0..stacks {
            let owner = (!config.share_horizontal_weights).then_some(k);
            horizontal.push(stack(&mut params, &config, "h", owner, feature_dim, &config.horizontal_dims, &mut init)?);
        }
        let vertical = stack(&mut params, &config, "v", None, feature_dim, &config.vertical_dims, &mut init)?;

        let mut fusion = Vec::new();
        if config.variant != ModelVariant::NoHorizontal {
            let dh = config.horizontal_output_dim();
            for (l, layer) in vertical.iter().enumerate() {
                let prefix = format!("v.l{l}.fusion");
                fusion.push(FusionParams::new(&mut params, &prefix, dh, layer.out_dim, config.beta_init, &mut init)?);
            }
        }

        let random_horizontal = (config.variant == ModelVariant::RandomHorizontal).then(|| {
            let mut r = rng(seed, "random-horizontal", 0);
            let dh = config.horizontal_output_dim();
            let data = (0..node_count * dh).map(|_| StandardNormal.sample(&mut r)).collect();
            Tensor::from_vec(node_count, dh, data).expect("sized")
        });

        Ok(Mpxgat { config, params, node_count, layer_count, feature_dim, horizontal, vertical, fusion, random_horizontal })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn horizontal_layers(&self, layer: usize) -> &[GatLayer] {
        &self.horizontal[if self.config.share_horizontal_weights { 0 } else { layer }]
    }

    pub fn vertical_layers(&self) -> &[GatLayer] {
        &self.vertical
    }

    pub fn fusion(&self) -> &[FusionParams] {
        &self.fusion
    }

    /// Fixed vectors replacing the horizontal embeddings in the fusion, if
    /// the variant uses them.
    pub fn random_horizontal(&self) -> Option<&Tensor> {
        self.random_horizontal.as_ref()
    }

    /// Records a forward pass with the given parameter values. Dropout is
    /// active exactly when `rng` is given.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParameterSet,
        topo: &Topology,
        features: &FeatureMatrix,
        rng: Option<&mut Rng>,
    ) -> Result<Embeddings> {
        features.check_rows(self.node_count)?;
        if topo.node_count() != self.node_count || topo.layers().len() != self.layer_count {
            return Err(Error::ShapeMismatch {
                op: "topology",
                left: [topo.node_count(), topo.layers().len()],
                right: [self.node_count, self.layer_count],
            });
        }
        if params.len() != self.params.len() {
            return Err(Error::ShapeMismatch { op: "parameters", left: [params.len(), 0], right: [self.params.len(), 0] });
        }
        let mut fw = Forward { tape, params, rng };
        let dense = match features {
            FeatureMatrix::OneHot { .. } => None,
            FeatureMatrix::Dense(t) => Some(fw.tape.constant(t.clone())?),
        };
        let cfg = &self.config;
        let mut attention = Vec::new();

        let mut parts = Vec::with_capacity(self.layer_count);
        for (k, lt) in topo.layers().iter().enumerate() {
            if lt.nodes.is_empty() {
                continue;
            }
            let first = match dense {
                None => None,
                Some(x) => Some(fw.tape.gather_rows(x, lt.nodes.clone())?),
            };
            let out = self.run_stack(&mut fw, self.horizontal_layers(k), &lt.nodes, first, &lt.segments, None, &mut attention, |depth| {
                Stage::Horizontal { layer: k, depth }
            })?;
            parts.push(out);
        }
        let stacked = fw.tape.concat_rows(&parts)?;
        let horizontal = fw.tape.gather_rows(stacked, topo.assemble().clone())?;

        let fusion_source = match (&self.random_horizontal, cfg.variant) {
            (_, ModelVariant::NoHorizontal) => None,
            (Some(r), _) => Some(fw.tape.constant(r.clone())?),
            (None, _) => Some(horizontal),
        };
        let fusion = match fusion_source {
            None => None,
            Some(h) => Some((h, fw.tape.constant(topo.degree().clone())?)),
        };
        let vertical = self.run_stack(
            &mut fw,
            &self.vertical,
            topo.all_nodes(),
            dense,
            topo.vertical(),
            fusion,
            &mut attention,
            |depth| Stage::Vertical { depth },
        )?;
        Ok(Embeddings { horizontal, vertical, attention })
    }

    #[allow(clippy::too_many_arguments)]
    fn run_stack(
        &self,
        fw: &mut Forward<'_>,
        layers: &[GatLayer],
        one_hot_cols: &Arc<[usize]>,
        dense_first: Option<Var>,
        seg: &Arc<Segments>,
        fusion: Option<(Var, Var)>,
        attention: &mut Vec<AttentionTrace>,
        stage: impl Fn(usize) -> Stage,
    ) -> Result<Var> {
        let cfg = &self.config;
        let mut x = dense_first;
        for (depth, layer) in layers.iter().enumerate() {
            let input = match x {
                None => LayerInput::OneHot(one_hot_cols),
                Some(v) if depth > 0 => LayerInput::Dense(fw.dropout(v, cfg.dropout_feature)?),
                Some(v) => LayerInput::Dense(v),
            };
            let (out, weights) = match fusion {
                Some((h, degree)) => {
                    let vl = VLayer { gat: layer.clone(), fusion: self.fusion[depth].clone() };
                    vl.forward(fw, input, seg, degree, h, cfg.leaky_slope, cfg.dropout_attention, cfg.clamp_beta)?
                }
                None => layer.forward(fw, input, seg, cfg.leaky_slope, cfg.dropout_attention)?,
            };
            for (head, w) in weights.into_iter().enumerate() {
                attention.push(AttentionTrace { stage: stage(depth), head, segments: seg.clone(), weights: w });
            }
            x = Some(out);
        }
        Ok(x.expect("stacks are non-empty"))
    }

    /// Evaluation-mode embeddings under the model's own parameters.
    pub fn embed(&self, topo: &Topology, features: &FeatureMatrix) -> Result<EmbeddingValues> {
        self.embed_with(&self.params, topo, features)
    }

    pub fn embed_with(&self, params: &ParameterSet, topo: &Topology, features: &FeatureMatrix) -> Result<EmbeddingValues> {
        let mut tape = Tape::new();
        let e = self.forward(&mut tape, params, topo, features, None)?;
        Ok(EmbeddingValues { horizontal: tape.value(e.horizontal).clone(), vertical: tape.value(e.vertical).clone() })
    }
}

fn stack(
    params: &mut ParameterSet,
    cfg: &ModelConfig,
    kind: &str,
    owner: Option<usize>,
    feature_dim: usize,
    dims: &[usize],
    init: &mut Rng,
) -> Result<Vec<GatLayer>> {
    let mut layers = Vec::with_capacity(dims.len());
    let mut in_dim = feature_dim;
    for (depth, &out) in dims.iter().enumerate() {
        let is_final = depth + 1 == dims.len();
        let heads = if is_final { cfg.heads_final } else { cfg.heads_hidden };
        let prefix = layers::layer_prefix(kind, owner, depth);
        let layer = GatLayer::new(params, &prefix, in_dim, out, heads, is_final, init)?;
        in_dim = layer.output_dim();
        layers.push(layer);
    }
    Ok(layers)
}

#[cfg(test)]
mod tests;
