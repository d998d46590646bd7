use alloc::vec::Vec;

use super::MultiplexGraph;
use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Node input features, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    /// Identity rows, stored implicitly: row `i` has a single 1 in column `i`.
    OneHot { nodes: usize },
    Dense(Tensor),
}

impl FeatureMatrix {
    pub fn dense(t: Tensor) -> Self {
        FeatureMatrix::Dense(t)
    }

    pub fn rows(&self) -> usize {
        match self {
            FeatureMatrix::OneHot { nodes } => *nodes,
            FeatureMatrix::Dense(t) => t.rows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMatrix::OneHot { nodes } => *nodes,
            FeatureMatrix::Dense(t) => t.cols(),
        }
    }

    /// Materialized row `i`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        match self {
            FeatureMatrix::OneHot { nodes } => {
                let mut r = alloc::vec![0.0; *nodes];
                r[i] = 1.0;
                r
            }
            FeatureMatrix::Dense(t) => t.row(i).to_vec(),
        }
    }

    pub fn dot(&self, i: usize, j: usize) -> f64 {
        match self {
            FeatureMatrix::OneHot { .. } => f64::from(u8::from(i == j)),
            FeatureMatrix::Dense(t) => t.row(i).iter().zip(t.row(j)).map(|(a, b)| a * b).sum(),
        }
    }

    /// Bytes held by the representation.
    pub fn storage_bytes(&self) -> usize {
        match self {
            FeatureMatrix::OneHot { .. } => core::mem::size_of::<Self>(),
            FeatureMatrix::Dense(t) => core::mem::size_of::<Self>() + t.len() * 8,
        }
    }

    pub(crate) fn check_rows(&self, nodes: usize) -> Result<()> {
        if self.rows() != nodes {
            return Err(Error::ShapeMismatch { op: "features", left: [self.rows(), self.dim()], right: [nodes, 0] });
        }
        Ok(())
    }
}

/// Identity features: node `n` gets the Kronecker vector `δ(·, n)`.
pub fn one_hot_features(g: &MultiplexGraph) -> FeatureMatrix {
    FeatureMatrix::OneHot { nodes: g.node_count() }
}
