use alloc::vec;
use alloc::vec::Vec;

use super::{build_multiplex_with_layers, ClosurePolicy, MultiplexGraph, Pair};
use crate::{Error, Result};

/// A subgraph together with the ids its nodes had in the source graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub graph: MultiplexGraph,
    /// `original[new_id]` is the node's id in the source graph.
    pub original: Vec<usize>,
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            core::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Induced subgraph on the largest component of the union of intra- and
/// inter-layer adjacency. Among equal-size components the one holding the
/// smallest node id wins. Node ids are re-indexed densely in original order;
/// layer indices are kept, so a layer missing from the component is empty.
pub fn largest_connected_component(g: &MultiplexGraph) -> Result<Component> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut sets = DisjointSet::new(n);
    for p in g.intra_edges().chain(g.inter_edges()) {
        sets.union(p.0, p.1);
    }
    // scanning ids upward, a root's first appearance is its smallest member
    let mut best: Option<(usize, usize)> = None;
    for u in 0..n {
        let root = sets.find(u);
        let size = sets.size[root];
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((root, size));
        }
    }
    let (root, _) = best.unwrap();

    let original: Vec<usize> = (0..n).filter(|&u| sets.find(u) == root).collect();
    let mut new_id = vec![usize::MAX; n];
    for (i, &u) in original.iter().enumerate() {
        new_id[u] = i;
    }
    let remap = |p: Pair| Pair::new(new_id[p.0], new_id[p.1]);
    let keep = |p: &Pair| new_id[p.0] != usize::MAX;
    let intra: Vec<Pair> = g.intra_edges().filter(keep).map(remap).collect();
    let inter: Vec<Pair> = g.inter_edges().filter(keep).map(remap).collect();
    let layers = original.iter().map(|&u| g.layer_of(u)).collect();
    let graph = build_multiplex_with_layers(g.layer_count(), layers, &intra, &inter, ClosurePolicy::Strict)?;
    Ok(Component { graph, original })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_multiplex;

    fn graph(layers: Vec<usize>, intra: &[(usize, usize)], inter: &[(usize, usize)]) -> MultiplexGraph {
        let intra: Vec<Pair> = intra.iter().map(|&(a, b)| Pair(a, b)).collect();
        let inter: Vec<Pair> = inter.iter().map(|&(a, b)| Pair(a, b)).collect();
        build_multiplex(layers, &intra, &inter, ClosurePolicy::Strict).unwrap()
    }

    #[test]
    fn tie_goes_to_component_with_smallest_id() {
        let g = graph(vec![0; 6], &[(3, 4), (4, 5), (3, 5), (0, 1), (1, 2), (0, 2)], &[]);
        let c = largest_connected_component(&g).unwrap();
        assert_eq!(c.original, vec![0, 1, 2]);
        assert_eq!(c.graph.intra_edge_count(), 3);
    }

    #[test]
    fn isolated_node_dropped() {
        let g = graph(vec![0; 4], &[(1, 2), (2, 3), (1, 3)], &[]);
        let c = largest_connected_component(&g).unwrap();
        assert_eq!(c.graph.node_count(), 3);
        assert_eq!(c.original, vec![1, 2, 3]);
    }

    #[test]
    fn inter_edges_join_components() {
        // layer 0: 0-1, layer 1: 2-3, joined only by inter edge 1-2; node 4 alone
        let g = graph(vec![0, 0, 1, 1, 1], &[(0, 1), (2, 3)], &[(1, 2)]);
        let c = largest_connected_component(&g).unwrap();
        assert_eq!(c.original, vec![0, 1, 2, 3]);
        assert_eq!(c.graph.inter_edge_count(), 1);
        assert_eq!(c.graph.layer_sizes(), vec![2, 2]);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = graph(vec![], &[], &[]);
        assert_eq!(largest_connected_component(&g), Err(Error::EmptyGraph));
    }
}
