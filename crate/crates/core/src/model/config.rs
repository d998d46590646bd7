use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which vertical sub-model to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Vertical attention fused with the learned horizontal embeddings.
    #[default]
    Full,
    /// Plain attention on the vertical network, no horizontal fusion.
    NoHorizontal,
    /// Fusion fed with fixed standard-normal vectors instead of the
    /// horizontal embeddings.
    RandomHorizontal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Per-head output width of each stacked horizontal layer.
    pub horizontal_dims: Vec<usize>,
    /// Per-head output width of each stacked vertical layer.
    pub vertical_dims: Vec<usize>,
    /// Heads of every non-final layer; their outputs are concatenated.
    pub heads_hidden: usize,
    /// Heads of the final layer; their outputs are averaged.
    pub heads_final: usize,
    pub dropout_attention: f64,
    /// Dropout on the inputs of non-first layers.
    pub dropout_feature: f64,
    pub leaky_slope: f64,
    /// One horizontal parameter set for all layers instead of one per layer.
    pub share_horizontal_weights: bool,
    /// Clamp the fusion weight `ReLU(β)` to at most 1.
    pub clamp_beta: bool,
    pub beta_init: f64,
    pub variant: ModelVariant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            horizontal_dims: vec![64, 64],
            vertical_dims: vec![64, 64],
            heads_hidden: 4,
            heads_final: 1,
            dropout_attention: 0.5,
            dropout_feature: 0.0,
            leaky_slope: 0.2,
            share_horizontal_weights: false,
            clamp_beta: false,
            beta_init: 0.5,
            variant: ModelVariant::Full,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizontal_dims.is_empty() || self.vertical_dims.is_empty() {
            return Err(Error::invalid("model", "each sub-model needs at least one layer"));
        }
        if self.horizontal_dims.iter().chain(&self.vertical_dims).any(|&d| d == 0) {
            return Err(Error::invalid("model", "layer widths must be positive"));
        }
        if self.heads_hidden == 0 || self.heads_final == 0 {
            return Err(Error::invalid("model", "head counts must be positive"));
        }
        for (name, p) in [("dropout_attention", self.dropout_attention), ("dropout_feature", self.dropout_feature)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::invalid(name, alloc::format!("{p} is not in [0, 1)")));
            }
        }
        if !self.leaky_slope.is_finite() || !self.beta_init.is_finite() {
            return Err(Error::invalid("model", "slope and beta_init must be finite"));
        }
        Ok(())
    }

    /// Width of the final horizontal embedding.
    pub fn horizontal_output_dim(&self) -> usize {
        *self.horizontal_dims.last().unwrap()
    }

    pub fn vertical_output_dim(&self) -> usize {
        *self.vertical_dims.last().unwrap()
    }
}
