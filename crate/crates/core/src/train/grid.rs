use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{train, TrainConfig};
use crate::graph::{FeatureMatrix, MultiplexGraph, SplitSpec};
use crate::{Error, Result};

/// Hyperparameter axes; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lr: Vec<f64>,
    /// Width of every attention layer.
    pub hidden: Vec<usize>,
    /// Heads of the hidden layers.
    pub heads: Vec<usize>,
    /// Attention dropout.
    pub dropout: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lr: vec![0.01, 0.005, 0.001], hidden: vec![32, 64], heads: vec![2, 4], dropout: vec![0.3, 0.5] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lr: f64,
    pub hidden: usize,
    pub heads: usize,
    pub dropout: f64,
}

impl GridPoint {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        c.lr = self.lr;
        c.model.horizontal_dims.iter_mut().chain(c.model.vertical_dims.iter_mut()).for_each(|d| *d = self.hidden);
        c.model.heads_hidden = self.heads;
        c.model.dropout_attention = self.dropout;
        c
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.lr.len() * self.hidden.len() * self.heads.len() * self.dropout.len());
        for &lr in &self.lr {
            for &hidden in &self.hidden {
                for &heads in &self.heads {
                    for &dropout in &self.dropout {
                        out.push(GridPoint { lr, hidden, heads, dropout });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub point: GridPoint,
    pub validation: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Why the cell failed, if it did.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Successful cells by decreasing validation AUC, then failed cells.
    pub leaderboard: Vec<GridCell>,
    pub best: Option<GridPoint>,
}

/// Trains one cell. Failures are recorded in the cell rather than returned.
pub fn run_grid_cell(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    split: &SplitSpec,
    base: &TrainConfig,
    point: GridPoint,
) -> GridCell {
    match train(graph, features, split, &point.apply(base)) {
        Ok(o) => GridCell { point, validation: o.best_validation, best_epoch: o.best_epoch, error: None },
        Err(e) => GridCell { point, validation: None, best_epoch: None, error: Some(e.to_string()) },
    }
}

/// Orders cells into a leaderboard. Ties keep grid order.
pub fn summarize_grid(mut cells: Vec<GridCell>) -> Result<GridReport> {
    cells.sort_by(|a, b| match (a.validation, b.validation) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => core::cmp::Ordering::Equal,
    });
    let best = cells.first().filter(|c| c.validation.is_some()).map(|c| c.point);
    if best.is_none() {
        let why = cells.iter().find_map(|c| c.error.clone()).unwrap_or_else(|| "no validation signal".into());
        return Err(Error::NoResults(why));
    }
    Ok(GridReport { leaderboard: cells, best })
}

/// Trains every grid point on one split and ranks them by validation AUC.
pub fn grid_search(
    graph: &MultiplexGraph,
    features: &FeatureMatrix,
    split: &SplitSpec,
    base: &TrainConfig,
    grid: &GridSpec,
) -> Result<GridReport> {
    let cells = grid.points().into_iter().map(|p| run_grid_cell(graph, features, split, base, p)).collect();
    summarize_grid(cells)
}
