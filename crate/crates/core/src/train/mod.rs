//! Link-prediction training.
//!
//! Each epoch scores the training positives plus freshly drawn negatives,
//! minimizes pooled binary cross-entropy with Adam and tracks validation AUC
//! on a held-out slice of the training positives for early stopping.

mod adam;
mod grid;
mod loss;
mod negatives;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use grid::{grid_search, run_grid_cell, summarize_grid, GridCell, GridPoint, GridReport, GridSpec};
pub use loss::{link_loss, pair_logits, LabeledPairs};
pub use negatives::resample_negatives;

use crate::autodiff::{ParamGrads, Tape};
use crate::eval::auc;
use crate::graph::{FeatureMatrix, MessageGraph, MultiplexGraph, Pair, PairClass, SplitSpec};
use crate::model::{EmbeddingValues, ModelConfig, Mpxgat, Topology};
use crate::rng::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    /// Negatives per positive drawn each epoch.
    pub train_neg_ratio: usize,
    /// Draw new negatives every epoch instead of reusing the split's.
    pub resample_negatives: bool,
    /// Share of training positives held out for validation.
    pub validation_fraction: f64,
    pub seed: u64,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let a = AdamConfig::default();
        TrainConfig {
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            epochs: 200,
            patience: 20,
            train_neg_ratio: 1,
            resample_negatives: true,
            validation_fraction: 0.1,
            seed: 0,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        self.model.validate()?;
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("validation_fraction", format!("{} is not in [0, 1)", self.validation_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub validation_intra: Option<f64>,
    pub validation_inter: Option<f64>,
    /// Pair-count weighted validation AUC over both classes.
    pub validation: Option<f64>,
}

/// Training inputs seen at one epoch, exposed to observers.
pub struct EpochView<'a> {
    pub epoch: usize,
    pub message: &'a MessageGraph,
    pub intra: &'a LabeledPairs,
    pub inter: &'a LabeledPairs,
    pub validation_intra: &'a LabeledPairs,
    pub validation_inter: &'a LabeledPairs,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Model holding the parameters of the best validation epoch (the last
    /// epoch when there is no validation signal).
    pub model: Mpxgat,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_validation: Option<f64>,
    pub stopped_early: bool,
    /// Message graph for evaluation: the full graph minus test positives.
    pub topology: Topology,
}

/// Training positives split into the part trained on and the validation part,
/// with validation negatives taken from the split's training negatives.
struct Holdout {
    train_pos: Vec<Pair>,
    validation: LabeledPairs,
    fixed_neg: Vec<Pair>,
}

fn holdout(split: &SplitSpec, class: PairClass, fraction: f64, seed: u64) -> Holdout {
    let (pos, neg) = split.train_pairs(class);
    let mut r = rng(seed, "validation", class as u64);
    let mut pos = pos.to_vec();
    let mut neg = neg.to_vec();
    let take = (libm::round(fraction * pos.len() as f64) as usize).min(pos.len().saturating_sub(1));
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);
    let val_pos = pos.split_off(pos.len() - take);
    let val_neg = neg.split_off(neg.len() - take.min(neg.len()));
    pos.sort_unstable();
    neg.sort_unstable();
    Holdout { train_pos: pos, validation: LabeledPairs::new(&val_pos, &val_neg), fixed_neg: neg }
}

/// AUC of `σ(x_u · x_v)` on a labeled batch; `None` without both labels.
pub fn batch_auc(emb: &EmbeddingValues, class: PairClass, batch: &LabeledPairs) -> Result<Option<f64>> {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (p, &y) in batch.pairs.iter().zip(&batch.labels) {
        let s = emb.score(class, p.0, p.1);
        if y > 0.5 { pos.push(s) } else { neg.push(s) }
    }
    if pos.is_empty() || neg.is_empty() {
        return Ok(None);
    }
    auc(&pos, &neg).map(Some)
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(op) => Error::Diverged { epoch, detail: format!("non-finite value in {op}") },
        other => other,
    }
}

pub fn train(graph: &MultiplexGraph, features: &FeatureMatrix, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_observed(graph, features, split, cfg, &mut |_| {})
}

/// [`train`], calling `observer` with the inputs of every epoch.
pub fn train_observed(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    split: &SplitSpec,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&EpochView<'_>),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    features.check_rows(graph.node_count())?;
    let mut model = Mpxgat::new(cfg.model.clone(), features, graph.layer_count(), cfg.seed)?;

    let intra = holdout(split, PairClass::Intra, cfg.validation_fraction, cfg.seed);
    let inter = holdout(split, PairClass::Inter, cfg.validation_fraction, cfg.seed);
    let held_out = |h: &Holdout| -> Vec<Pair> {
        h.validation.pairs.iter().zip(&h.validation.labels).filter(|(_, &y)| y > 0.5).map(|(p, _)| *p).collect()
    };
    let mut hide_intra = split.test_pos_intra.clone();
    hide_intra.extend(held_out(&intra));
    let mut hide_inter = split.test_pos_inter.clone();
    hide_inter.extend(held_out(&inter));
    let message = graph.message_graph_excluding(&hide_intra, &hide_inter);
    let topo = Topology::new(&message)?;
    let eval_topo = Topology::new(&graph.message_graph_excluding(&split.test_pos_intra, &split.test_pos_inter))?;

    let exclude_for = |h: &Holdout, class: PairClass| -> BTreeSet<Pair> {
        let (_, test_neg) = split.test_pairs(class);
        let val_neg = h.validation.pairs.iter().zip(&h.validation.labels).filter(|(_, &y)| y < 0.5).map(|(p, _)| *p);
        test_neg.iter().copied().chain(val_neg).collect()
    };
    let exclude_intra = exclude_for(&intra, PairClass::Intra);
    let exclude_inter = exclude_for(&inter, PairClass::Inter);

    let mut opt = Adam::new(model.params(), cfg.adam())?;
    let mut grads = ParamGrads::zeros_like(model.params());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize)> = None;
    let mut best_params = model.params().clone();
    let mut stopped_early = false;

    for epoch in 0..cfg.epochs {
        let batch = |h: &Holdout, class: PairClass, exclude: &BTreeSet<Pair>| -> LabeledPairs {
            let negs = if cfg.resample_negatives {
                let count = h.train_pos.len() * cfg.train_neg_ratio;
                resample_negatives(graph, class, count, &[exclude], cfg.seed, epoch as u64)
            } else {
                h.fixed_neg.clone()
            };
            LabeledPairs::new(&h.train_pos, &negs)
        };
        let intra_batch = batch(&intra, PairClass::Intra, &exclude_intra);
        let inter_batch = batch(&inter, PairClass::Inter, &exclude_inter);
        observer(&EpochView {
            epoch,
            message: &message,
            intra: &intra_batch,
            inter: &inter_batch,
            validation_intra: &intra.validation,
            validation_inter: &inter.validation,
        });

        let mut tape = Tape::new();
        let mut dropout = rng(cfg.seed, "dropout", epoch as u64);
        let loss = (|| {
            let emb = model.forward(&mut tape, model.params(), &topo, features, Some(&mut dropout))?;
            link_loss(&mut tape, &emb, &intra_batch, &inter_batch)
        })()
        .map_err(|e| diverged(epoch, e))?;
        let Some(loss) = loss else {
            return Err(Error::invalid("split", "no training pairs"));
        };
        let loss_value = tape.value(loss).item();
        grads.zero();
        tape.backward_into(loss, &mut grads).map_err(|e| diverged(epoch, e))?;
        if !grads.is_finite() {
            return Err(Error::Diverged { epoch, detail: "non-finite gradient".into() });
        }
        opt.step(model.params_mut(), &grads);

        let emb = model.embed(&topo, features).map_err(|e| diverged(epoch, e))?;
        let vi = batch_auc(&emb, PairClass::Intra, &intra.validation)?;
        let ve = batch_auc(&emb, PairClass::Inter, &inter.validation)?;
        let validation = weighted(&[(vi, intra.validation.len()), (ve, inter.validation.len())]);
        log::debug!("epoch {epoch}: loss {loss_value:.6}, validation {validation:?}");
        history.push(EpochRecord { epoch, loss: loss_value, validation_intra: vi, validation_inter: ve, validation });

        match validation {
            Some(v) if best.is_none_or(|(b, _)| v > b) => {
                best = Some((v, epoch));
                best_params = model.params().clone();
            }
            Some(_) => {
                let (_, at) = best.expect("set");
                if cfg.patience > 0 && epoch - at >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
            None => best_params = model.params().clone(),
        }
    }
    model.params_mut().load_from(&best_params)?;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch: best.map(|b| b.1),
        best_validation: best.map(|b| b.0),
        stopped_early,
        topology: eval_topo,
    })
}

/// Mean of the present values weighted by their counts.
pub(crate) fn weighted(parts: &[(Option<f64>, usize)]) -> Option<f64> {
    let (mut s, mut w) = (0.0, 0usize);
    for &(v, n) in parts {
        if let Some(v) = v {
            s += v * n as f64;
            w += n;
        }
    }
    (w > 0).then(|| s / w as f64)
}
