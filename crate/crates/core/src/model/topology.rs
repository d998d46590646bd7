use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::autodiff::{Segments, Tensor};
use crate::graph::{Adjacency, MessageGraph};
use crate::Result;

/// Attention neighborhoods of one layer's intra-layer graph, in local indices.
#[derive(Debug, Clone)]
pub struct LayerTopology {
    /// Global ids of the layer's nodes, in local order.
    pub nodes: Arc<[usize]>,
    pub segments: Arc<Segments>,
}

/// Everything a forward pass needs from a [`MessageGraph`], precomputed.
///
/// A node without neighbors in a network attends to itself alone, so every
/// attention segment is non-empty.
#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    layers: Vec<LayerTopology>,
    vertical: Arc<Segments>,
    degree: Tensor,
    all_nodes: Arc<[usize]>,
    assemble: Arc<[usize]>,
}

fn neighborhood(adj: &Adjacency, u: usize, map: impl Fn(usize) -> usize, own: usize) -> Vec<usize> {
    let n = adj.neighbors(u);
    if n.is_empty() {
        alloc::vec![own]
    } else {
        n.iter().map(|&v| map(v)).collect()
    }
}

impl Topology {
    pub fn new(graph: &MessageGraph) -> Result<Self> {
        let n = graph.node_count();
        let mut layers = Vec::with_capacity(graph.layer_count());
        let mut assemble = alloc::vec![0; n];
        let mut offset = 0;
        for k in 0..graph.layer_count() {
            let nodes = graph.layer_nodes(k);
            let lists: Vec<Vec<usize>> = nodes
                .iter()
                .enumerate()
                .map(|(i, &u)| neighborhood(graph.intra(), u, |v| graph.local_index(v), i))
                .collect();
            for (i, &u) in nodes.iter().enumerate() {
                assemble[u] = offset + i;
            }
            offset += nodes.len();
            layers.push(LayerTopology {
                nodes: nodes.into(),
                segments: Arc::new(Segments::from_lists(&lists, nodes.len())?),
            });
        }
        let lists: Vec<Vec<usize>> = (0..n).map(|u| neighborhood(graph.inter(), u, |v| v, u)).collect();
        let vertical = Segments::from_lists(&lists, n)?;
        let degree = Tensor::from_vec(n, 1, (0..n).map(|u| vertical.len_of(u) as f64).collect())?;
        Ok(Topology {
            node_count: n,
            layers,
            vertical: Arc::new(vertical),
            degree,
            all_nodes: (0..n).collect(),
            assemble: assemble.into(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn layers(&self) -> &[LayerTopology] {
        &self.layers
    }

    /// Inter-layer neighborhoods over global ids.
    pub fn vertical(&self) -> &Arc<Segments> {
        &self.vertical
    }

    /// `N×1` neighborhood sizes on the vertical network.
    pub fn degree(&self) -> &Tensor {
        &self.degree
    }

    pub fn all_nodes(&self) -> &Arc<[usize]> {
        &self.all_nodes
    }

    /// Row of each global node in the layer-by-layer concatenation.
    pub fn assemble(&self) -> &Arc<[usize]> {
        &self.assemble
    }
}
