//! Multiplex graph data model.
//!
//! Nodes are dense `0..N` ids, each assigned to exactly one layer. Intra-layer
//! and inter-layer adjacency are stored separately as symmetric compressed
//! neighbor lists.

mod features;
mod lcc;
mod sampling;
mod split;
mod synth;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use features::{one_hot_features, FeatureMatrix};
pub use lcc::{largest_connected_component, Component};
pub use sampling::{intra_non_edge_count, inter_non_edge_count, PairClass};
pub(crate) use sampling::PairUniverse;
pub use split::{generate_split, EmptySplitPolicy, IntraScope, NegPolicy, SplitConfig, SplitSpec};
pub use synth::{synthetic_multiplex, SyntheticSpec};

/// Unordered node pair, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair(pub usize, pub usize);

impl Pair {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Pair(a, b)
        } else {
            Pair(b, a)
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.0 <= self.1
    }
}

/// Symmetric neighbor lists in compressed form; each list is sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Adjacency {
    /// Builds from canonical, deduplicated, loop-free pairs.
    fn from_pairs(node_count: usize, pairs: &BTreeSet<Pair>) -> Self {
        let mut degree = vec![0usize; node_count];
        for p in pairs {
            degree[p.0] += 1;
            degree[p.1] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..node_count].to_vec();
        let mut neighbors = vec![0usize; offsets[node_count]];
        for p in pairs {
            neighbors[fill[p.0]] = p.1;
            fill[p.0] += 1;
            neighbors[fill[p.1]] = p.0;
            fill[p.1] += 1;
        }
        for u in 0..node_count {
            neighbors[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Adjacency { offsets, neighbors }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Undirected edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| Pair(u, v))
        })
    }

    fn without(&self, removed: &BTreeSet<Pair>) -> Self {
        let kept: BTreeSet<Pair> = self.edges().filter(|p| !removed.contains(p)).collect();
        Adjacency::from_pairs(self.node_count(), &kept)
    }
}

/// How `build_multiplex` treats inter-layer components that are not cliques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosurePolicy {
    /// Reject the input.
    #[default]
    Strict,
    /// Add the missing inter-layer edges.
    Close,
}

/// A validated multiplex graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexGraph {
    node_layer: Vec<usize>,
    layer_nodes: Vec<Vec<usize>>,
    local_index: Vec<usize>,
    intra: Adjacency,
    inter: Adjacency,
}

impl MultiplexGraph {
    pub fn node_count(&self) -> usize {
        self.node_layer.len()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_nodes.len()
    }

    pub fn layer_of(&self, node: usize) -> usize {
        self.node_layer[node]
    }

    pub fn node_layers(&self) -> &[usize] {
        &self.node_layer
    }

    /// Global ids of the nodes on `layer`, ascending.
    pub fn layer_nodes(&self, layer: usize) -> &[usize] {
        &self.layer_nodes[layer]
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layer_nodes.iter().map(Vec::len).collect()
    }

    /// Position of `node` within its layer's node list.
    pub fn local_index(&self, node: usize) -> usize {
        self.local_index[node]
    }

    pub fn intra(&self) -> &Adjacency {
        &self.intra
    }

    pub fn inter(&self) -> &Adjacency {
        &self.inter
    }

    pub fn intra_edge_count(&self) -> usize {
        self.intra.edge_count()
    }

    pub fn inter_edge_count(&self) -> usize {
        self.inter.edge_count()
    }

    pub fn edge_count(&self) -> usize {
        self.intra_edge_count() + self.inter_edge_count()
    }

    pub fn has_intra_edge(&self, u: usize, v: usize) -> bool {
        self.intra.contains(u, v)
    }

    pub fn has_inter_edge(&self, u: usize, v: usize) -> bool {
        self.inter.contains(u, v)
    }

    pub fn intra_edges(&self) -> impl Iterator<Item = Pair> + '_ {
        self.intra.edges()
    }

    pub fn inter_edges(&self) -> impl Iterator<Item = Pair> + '_ {
        self.inter.edges()
    }

    /// The full graph as seen by the model.
    pub fn message_graph(&self) -> MessageGraph {
        MessageGraph {
            node_layer: self.node_layer.clone(),
            layer_nodes: self.layer_nodes.clone(),
            local_index: self.local_index.clone(),
            intra: self.intra.clone(),
            inter: self.inter.clone(),
        }
    }

    /// The graph with the given edges hidden. Hiding inter-layer edges can
    /// break the clique structure, so the result is a plain [`MessageGraph`].
    pub fn message_graph_excluding(&self, intra: &[Pair], inter: &[Pair]) -> MessageGraph {
        let intra: BTreeSet<Pair> = intra.iter().map(|p| Pair::new(p.0, p.1)).collect();
        let inter: BTreeSet<Pair> = inter.iter().map(|p| Pair::new(p.0, p.1)).collect();
        MessageGraph {
            node_layer: self.node_layer.clone(),
            layer_nodes: self.layer_nodes.clone(),
            local_index: self.local_index.clone(),
            intra: self.intra.without(&intra),
            inter: self.inter.without(&inter),
        }
    }

    /// Re-checks every structural invariant. Used by tests and after ingestion.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = build_multiplex_with_layers(
            self.layer_count(),
            self.node_layer.clone(),
            &self.intra.edges().collect::<Vec<_>>(),
            &self.inter.edges().collect::<Vec<_>>(),
            ClosurePolicy::Strict,
        )?;
        if &rebuilt != self {
            return Err(Error::invalid("graph", "adjacency is not canonical"));
        }
        Ok(())
    }
}

/// Node layout plus (possibly partial) adjacency: the structure a forward
/// pass runs on. Unlike [`MultiplexGraph`] it is not required to be
/// clique-closed.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageGraph {
    node_layer: Vec<usize>,
    layer_nodes: Vec<Vec<usize>>,
    local_index: Vec<usize>,
    intra: Adjacency,
    inter: Adjacency,
}

impl MessageGraph {
    pub fn node_count(&self) -> usize {
        self.node_layer.len()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_nodes.len()
    }

    pub fn layer_of(&self, node: usize) -> usize {
        self.node_layer[node]
    }

    pub fn layer_nodes(&self, layer: usize) -> &[usize] {
        &self.layer_nodes[layer]
    }

    pub fn local_index(&self, node: usize) -> usize {
        self.local_index[node]
    }

    pub fn intra(&self) -> &Adjacency {
        &self.intra
    }

    pub fn inter(&self) -> &Adjacency {
        &self.inter
    }
}

/// Builds and validates a multiplex graph.
///
/// `node_layer[u]` is the layer of node `u`; layers are `0..=max`. Edges may be
/// given in either orientation and may repeat.
pub fn build_multiplex(
    node_layer: Vec<usize>,
    intra_edges: &[Pair],
    inter_edges: &[Pair],
    closure: ClosurePolicy,
) -> Result<MultiplexGraph> {
    let layer_count = node_layer.iter().max().map_or(0, |&m| m + 1);
    build_multiplex_with_layers(layer_count, node_layer, intra_edges, inter_edges, closure)
}

/// As [`build_multiplex`] with an explicit layer count, so trailing layers may
/// be empty.
pub fn build_multiplex_with_layers(
    layer_count: usize,
    node_layer: Vec<usize>,
    intra_edges: &[Pair],
    inter_edges: &[Pair],
    closure: ClosurePolicy,
) -> Result<MultiplexGraph> {
    let n = node_layer.len();
    if let Some(&bad) = node_layer.iter().find(|&&l| l >= layer_count) {
        return Err(Error::invalid("node_layer", alloc::format!("layer {bad} >= layer count {layer_count}")));
    }
    let mut layer_nodes = vec![Vec::new(); layer_count];
    let mut local_index = vec![0; n];
    for (u, &layer) in node_layer.iter().enumerate() {
        local_index[u] = layer_nodes[layer].len();
        layer_nodes[layer].push(u);
    }

    let check = |p: &Pair| -> Result<Pair> {
        for node in [p.0, p.1] {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, node_count: n });
            }
        }
        if p.0 == p.1 {
            return Err(Error::SelfLoop(p.0));
        }
        Ok(Pair::new(p.0, p.1))
    };

    let mut intra = BTreeSet::new();
    for p in intra_edges {
        let p = check(p)?;
        let (lu, lv) = (node_layer[p.0], node_layer[p.1]);
        if lu != lv {
            return Err(Error::IntraCrossesLayers { edge: p, layer_u: lu, layer_v: lv });
        }
        intra.insert(p);
    }

    let mut inter = BTreeSet::new();
    for p in inter_edges {
        let p = check(p)?;
        if node_layer[p.0] == node_layer[p.1] {
            return Err(Error::InterWithinLayer { edge: p, layer: node_layer[p.0] });
        }
        inter.insert(p);
    }

    let mut inter_adj = Adjacency::from_pairs(n, &inter);
    for u in 0..n {
        let mut seen = BTreeSet::new();
        for &v in inter_adj.neighbors(u) {
            if !seen.insert(node_layer[v]) {
                return Err(Error::DuplicateCounterpart { node: u, layer: node_layer[v] });
            }
        }
    }

    let components = components_of(n, &inter_adj);
    let mut added = false;
    for comp in &components {
        if comp.len() < 2 {
            continue;
        }
        let size = comp.len();
        let complete = comp.iter().all(|&u| inter_adj.degree(u) == size - 1);
        if complete {
            continue;
        }
        match closure {
            ClosurePolicy::Strict => {
                let u = *comp.iter().find(|&&u| inter_adj.degree(u) < size - 1).unwrap();
                let (a, b, c) = closure_witness(&inter_adj, u);
                return Err(Error::ClosureViolation(a, b, c));
            }
            ClosurePolicy::Close => {
                let mut by_layer = BTreeMap::new();
                for &u in comp {
                    if let Some(prev) = by_layer.insert(node_layer[u], u) {
                        let other = comp.iter().copied().find(|&w| node_layer[w] != node_layer[u]);
                        return Err(Error::DuplicateCounterpart {
                            node: other.unwrap_or(prev),
                            layer: node_layer[u],
                        });
                    }
                }
                for (i, &u) in comp.iter().enumerate() {
                    for &v in &comp[i + 1..] {
                        added |= inter.insert(Pair::new(u, v));
                    }
                }
            }
        }
    }
    if added {
        inter_adj = Adjacency::from_pairs(n, &inter);
    }

    Ok(MultiplexGraph {
        intra: Adjacency::from_pairs(n, &intra),
        inter: inter_adj,
        node_layer,
        layer_nodes,
        local_index,
    })
}

/// Connected components of one adjacency, each sorted, ordered by smallest id.
fn components_of(n: usize, adj: &Adjacency) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in adj.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// For `u` lacking a link to some node of its component, returns the first
/// three nodes `(u, a, b)` of a shortest path from `u` to a node at distance 2.
fn closure_witness(adj: &Adjacency, u: usize) -> (usize, usize, usize) {
    for &a in adj.neighbors(u) {
        for &b in adj.neighbors(a) {
            if b != u && !adj.contains(u, b) {
                return (u, a, b);
            }
        }
    }
    unreachable!("a node with a missing clique edge has a neighbor-of-neighbor it is not linked to")
}
