//! Parallel drivers. Work items are independent and seeded by index, and
//! results are collected in index order, so output does not depend on the
//! worker count.

use mpxgat_core::eval::{
    ablation_report, run_ablation_repetition, run_repetition, summarize, AblationReport, ExperimentConfig,
    ExperimentReport,
};
use mpxgat_core::graph::{FeatureMatrix, MultiplexGraph, SplitSpec};
use mpxgat_core::model::ModelVariant;
use mpxgat_core::train::{run_grid_cell, summarize_grid, GridReport, GridSpec, TrainConfig};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};

pub fn pool(workers: usize) -> Result<ThreadPool> {
    if workers == 0 {
        return Err(Error::Usage("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))
}

pub fn experiment(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentReport> {
    let reps = pool(workers)?.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|r| {
                let out = run_repetition(graph, features, cfg, r);
                log::info!("repetition {r} done");
                out
            })
            .collect::<mpxgat_core::Result<Vec<_>>>()
    })?;
    Ok(summarize(cfg.train.model.variant, reps))
}

pub fn ablation(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    cfg: &ExperimentConfig,
    ablated: ModelVariant,
    workers: usize,
) -> Result<AblationReport> {
    let reps = pool(workers)?.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|r| {
                let out = run_ablation_repetition(graph, features, cfg, ablated, r);
                log::info!("ablation repetition {r} done");
                out
            })
            .collect::<mpxgat_core::Result<Vec<_>>>()
    })?;
    Ok(ablation_report(ablated, reps)?)
}

pub fn grid(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    split: &SplitSpec,
    base: &TrainConfig,
    spec: &GridSpec,
    workers: usize,
) -> Result<GridReport> {
    let points = spec.points();
    let cells = pool(workers)?.install(|| {
        points
            .into_par_iter()
            .map(|p| {
                let cell = run_grid_cell(graph, features, split, base, p);
                log::info!("grid point {p:?} done");
                cell
            })
            .collect::<Vec<_>>()
    });
    Ok(summarize_grid(cells)?)
}
