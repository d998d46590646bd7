use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{auc, mean, sample_std, welch_t_test, WelchTest};
use crate::graph::{generate_split, FeatureMatrix, MultiplexGraph, PairClass, SplitConfig, SplitSpec};
use crate::model::{ModelVariant, Mpxgat, Topology};
use crate::rng::derive;
use crate::train::{train, TrainConfig};
use crate::{Error, Result};

/// Test-set AUC of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl ClassReport {
    pub fn pairs(&self) -> usize {
        self.positives + self.negatives
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestScores {
    pub intra: Option<ClassReport>,
    pub inter: Option<ClassReport>,
    /// Class AUCs weighted by their evaluated pair counts.
    pub overall: f64,
}

fn class_report(emb: &crate::model::EmbeddingValues, split: &SplitSpec, class: PairClass) -> Result<Option<ClassReport>> {
    let (pos, neg) = split.test_pairs(class);
    if pos.is_empty() || neg.is_empty() {
        return Ok(None);
    }
    let s = |ps: &[crate::graph::Pair]| -> Vec<f64> { ps.iter().map(|p| emb.score(class, p.0, p.1)).collect() };
    Ok(Some(ClassReport { auc: auc(&s(pos), &s(neg))?, positives: pos.len(), negatives: neg.len() }))
}

/// Scores the split's test pairs with `model` over `topo`.
pub fn evaluate(model: &Mpxgat, topo: &Topology, features: &FeatureMatrix, split: &SplitSpec) -> Result<TestScores> {
    let emb = model.embed(topo, features)?;
    let intra = class_report(&emb, split, PairClass::Intra)?;
    let inter = class_report(&emb, split, PairClass::Inter)?;
    let parts: Vec<&ClassReport> = intra.iter().chain(inter.iter()).collect();
    let total: usize = parts.iter().map(|c| c.pairs()).sum();
    if total == 0 {
        return Err(Error::EmptyScores("test"));
    }
    let overall = parts.iter().map(|c| c.auc * c.pairs() as f64).sum::<f64>() / total as f64;
    Ok(TestScores { intra, inter, overall })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub repetitions: usize,
    /// Base seed; repetition `r` derives its split and training seeds from it.
    pub seed: u64,
    pub split: SplitConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { repetitions: 10, seed: 0, split: SplitConfig::default(), train: TrainConfig::default() }
    }
}

impl ExperimentConfig {
    pub fn split_seed(&self, rep: usize) -> u64 {
        derive(self.seed, "split", rep as u64)
    }

    pub fn train_seed(&self, rep: usize) -> u64 {
        derive(self.seed, "train", rep as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub index: usize,
    pub split_seed: u64,
    pub train_seed: u64,
    pub scores: TestScores,
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
}

/// Mean and sample standard deviation over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Summary> {
        (!xs.is_empty()).then(|| Summary { mean: mean(xs), std: sample_std(xs), count: xs.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub variant: ModelVariant,
    pub repetitions: Vec<Repetition>,
    pub intra: Option<Summary>,
    pub inter: Option<Summary>,
    pub overall: Option<Summary>,
}

fn run_with(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    cfg: &ExperimentConfig,
    rep: usize,
    split: &SplitSpec,
    variant: ModelVariant,
) -> Result<Repetition> {
    let mut tc = cfg.train.clone();
    tc.seed = cfg.train_seed(rep);
    tc.model.variant = variant;
    let out = train(graph, features, split, &tc)?;
    let scores = evaluate(&out.model, &out.topology, features, split)?;
    Ok(Repetition {
        index: rep,
        split_seed: split.seed,
        train_seed: tc.seed,
        scores,
        best_epoch: out.best_epoch,
        epochs_run: out.history.len(),
    })
}

/// One repetition: a fresh split and a fresh model, both seeded from `rep`.
pub fn run_repetition(graph: &MultiplexGraph, features: &FeatureMatrix, cfg: &ExperimentConfig, rep: usize) -> Result<Repetition> {
    let split = generate_split(graph, &cfg.split, cfg.split_seed(rep))?;
    run_with(graph, features, cfg, rep, &split, cfg.train.model.variant)
}

pub fn summarize(variant: ModelVariant, mut repetitions: Vec<Repetition>) -> ExperimentReport {
    repetitions.sort_by_key(|r| r.index);
    let col = |f: &dyn Fn(&Repetition) -> Option<f64>| -> Vec<f64> { repetitions.iter().filter_map(f).collect() };
    let intra = Summary::of(&col(&|r| r.scores.intra.map(|c| c.auc)));
    let inter = Summary::of(&col(&|r| r.scores.inter.map(|c| c.auc)));
    let overall = Summary::of(&col(&|r| Some(r.scores.overall)));
    ExperimentReport { variant, repetitions, intra, inter, overall }
}

/// Runs `cfg.repetitions` repetitions one after another.
pub fn repeat_experiment(graph: &MultiplexGraph, features: &FeatureMatrix, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let reps = (0..cfg.repetitions).map(|r| run_repetition(graph, features, cfg, r)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg.train.model.variant, reps))
}

/// The full model and an ablated variant on the same split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRepetition {
    pub full: Repetition,
    pub ablated: Repetition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub ablated_variant: ModelVariant,
    pub full: ExperimentReport,
    pub ablated: ExperimentReport,
    /// Repetitions where the ablated inter-layer AUC does not exceed the full one.
    pub ablated_not_better: usize,
    pub paired: usize,
    /// Welch's test on inter-layer AUCs, full against ablated.
    pub welch: Option<WelchTest>,
}

pub fn run_ablation_repetition(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    cfg: &ExperimentConfig,
    ablated: ModelVariant,
    rep: usize,
) -> Result<AblationRepetition> {
    let split = generate_split(graph, &cfg.split, cfg.split_seed(rep))?;
    Ok(AblationRepetition {
        full: run_with(graph, features, cfg, rep, &split, ModelVariant::Full)?,
        ablated: run_with(graph, features, cfg, rep, &split, ablated)?,
    })
}

pub fn ablation_report(ablated_variant: ModelVariant, reps: Vec<AblationRepetition>) -> Result<AblationReport> {
    let pairs: Vec<(f64, f64)> = reps
        .iter()
        .filter_map(|r| Some((r.full.scores.inter?.auc, r.ablated.scores.inter?.auc)))
        .collect();
    let ablated_not_better = pairs.iter().filter(|(f, a)| a <= f).count();
    let full_inter: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ablated_inter: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let welch = if pairs.len() >= 2 { Some(welch_t_test(&full_inter, &ablated_inter)?) } else { None };
    let (full, ablated): (Vec<_>, Vec<_>) = reps.into_iter().map(|r| (r.full, r.ablated)).unzip();
    Ok(AblationReport {
        ablated_variant,
        full: summarize(ModelVariant::Full, full),
        ablated: summarize(ablated_variant, ablated),
        ablated_not_better,
        paired: pairs.len(),
        welch,
    })
}

/// Sequential paired ablation over `cfg.repetitions` splits.
pub fn run_ablation(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    cfg: &ExperimentConfig,
    ablated: ModelVariant,
) -> Result<AblationReport> {
    let reps = (0..cfg.repetitions)
        .map(|r| run_ablation_repetition(graph, features, cfg, ablated, r))
        .collect::<Result<Vec<_>>>()?;
    ablation_report(ablated, reps)
}
