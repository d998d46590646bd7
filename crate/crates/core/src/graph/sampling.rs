//! Uniform sampling of node pairs that are not edges of a given class.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MultiplexGraph, Pair};

/// Intra-layer pairs join nodes of one layer; inter-layer pairs join nodes of
/// different layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    Intra,
    Inter,
}

impl PairClass {
    pub fn name(self) -> &'static str {
        match self {
            PairClass::Intra => "intra",
            PairClass::Inter => "inter",
        }
    }
}

/// Universes at or below this size are enumerated instead of rejection-sampled.
const ENUMERATE_LIMIT: usize = 200_000;

fn choose2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All pairs of one class whose endpoints both lie in a node subset.
pub(crate) struct PairUniverse<'g> {
    graph: &'g MultiplexGraph,
    class: PairClass,
    member: Vec<bool>,
    nodes: Vec<usize>,
    by_layer: Vec<Vec<usize>>,
    layer_weights: Vec<usize>,
}

impl<'g> PairUniverse<'g> {
    pub(crate) fn new(graph: &'g MultiplexGraph, class: PairClass, nodes: &[usize]) -> Self {
        let mut member = vec![false; graph.node_count()];
        let mut by_layer = vec![Vec::new(); graph.layer_count()];
        let mut list = Vec::with_capacity(nodes.len());
        for &u in nodes {
            if !member[u] {
                member[u] = true;
                list.push(u);
            }
        }
        list.sort_unstable();
        for &u in &list {
            by_layer[graph.layer_of(u)].push(u);
        }
        let layer_weights = by_layer.iter().map(|l| choose2(l.len())).collect();
        PairUniverse { graph, class, member, nodes: list, by_layer, layer_weights }
    }

    pub(crate) fn all_nodes(graph: &'g MultiplexGraph, class: PairClass) -> Self {
        let nodes: Vec<usize> = (0..graph.node_count()).collect();
        Self::new(graph, class, &nodes)
    }

    pub(crate) fn size(&self) -> usize {
        let same: usize = self.layer_weights.iter().sum();
        match self.class {
            PairClass::Intra => same,
            PairClass::Inter => choose2(self.nodes.len()) - same,
        }
    }

    pub(crate) fn contains(&self, p: Pair) -> bool {
        if !(self.member[p.0] && self.member[p.1]) || p.0 == p.1 {
            return false;
        }
        let same = self.graph.layer_of(p.0) == self.graph.layer_of(p.1);
        same == (self.class == PairClass::Intra)
    }

    pub(crate) fn is_edge(&self, p: Pair) -> bool {
        match self.class {
            PairClass::Intra => self.graph.has_intra_edge(p.0, p.1),
            PairClass::Inter => self.graph.has_inter_edge(p.0, p.1),
        }
    }

    /// Edges of the class lying inside the universe.
    pub(crate) fn edges(&self) -> Vec<Pair> {
        let it: Vec<Pair> = match self.class {
            PairClass::Intra => self.graph.intra_edges().collect(),
            PairClass::Inter => self.graph.inter_edges().collect(),
        };
        it.into_iter().filter(|&p| self.contains(p)).collect()
    }

    fn enumerate(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        match self.class {
            PairClass::Intra => {
                for layer in &self.by_layer {
                    for (i, &u) in layer.iter().enumerate() {
                        for &v in &layer[i + 1..] {
                            out.push(Pair(u, v));
                        }
                    }
                }
            }
            PairClass::Inter => {
                for (i, &u) in self.nodes.iter().enumerate() {
                    for &v in &self.nodes[i + 1..] {
                        if self.graph.layer_of(u) != self.graph.layer_of(v) {
                            out.push(Pair(u, v));
                        }
                    }
                }
            }
        }
        out
    }

    /// One pair drawn uniformly from the universe. The universe must be non-empty.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Pair {
        match self.class {
            PairClass::Intra => {
                let total: usize = self.layer_weights.iter().sum();
                let mut pick = rng.random_range(0..total);
                let mut layer = 0;
                while pick >= self.layer_weights[layer] {
                    pick -= self.layer_weights[layer];
                    layer += 1;
                }
                let nodes = &self.by_layer[layer];
                let a = rng.random_range(0..nodes.len());
                let mut b = rng.random_range(0..nodes.len() - 1);
                if b >= a {
                    b += 1;
                }
                Pair::new(nodes[a], nodes[b])
            }
            PairClass::Inter => loop {
                let a = rng.random_range(0..self.nodes.len());
                let mut b = rng.random_range(0..self.nodes.len() - 1);
                if b >= a {
                    b += 1;
                }
                let (u, v) = (self.nodes[a], self.nodes[b]);
                if self.graph.layer_of(u) != self.graph.layer_of(v) {
                    break Pair::new(u, v);
                }
            },
        }
    }

    /// Non-edges of the universe not present in any `exclude` set.
    pub(crate) fn candidate_count(&self, exclude: &[&BTreeSet<Pair>]) -> usize {
        let mut excluded = 0;
        for (i, set) in exclude.iter().enumerate() {
            excluded += set
                .iter()
                .filter(|&&p| self.contains(p) && !self.is_edge(p) && !exclude[..i].iter().any(|s| s.contains(&p)))
                .count();
        }
        self.size() - self.edges().len() - excluded
    }

    fn is_candidate(&self, p: Pair, exclude: &[&BTreeSet<Pair>]) -> bool {
        !self.is_edge(p) && !exclude.iter().any(|s| s.contains(&p))
    }

    /// Samples `count` distinct candidate pairs uniformly without replacement.
    /// Returns fewer when the universe holds fewer candidates. Output is sorted.
    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        count: usize,
        exclude: &[&BTreeSet<Pair>],
        rng: &mut R,
    ) -> Vec<Pair> {
        if count == 0 {
            return Vec::new();
        }
        let available = self.candidate_count(exclude);
        let mut out = if self.size() <= ENUMERATE_LIMIT || count.saturating_mul(2) > available {
            let mut all: Vec<Pair> =
                self.enumerate().into_iter().filter(|&p| self.is_candidate(p, exclude)).collect();
            let take = count.min(all.len());
            let (chosen, _) = all.partial_shuffle(rng, take);
            chosen.to_vec()
        } else {
            let mut chosen = BTreeSet::new();
            while chosen.len() < count {
                let p = self.draw(rng);
                if self.is_candidate(p, exclude) {
                    chosen.insert(p);
                }
            }
            chosen.into_iter().collect()
        };
        out.sort_unstable();
        out
    }

    /// Samples `count` candidate pairs uniformly with replacement. Empty when
    /// there is no candidate at all.
    pub(crate) fn sample_with_replacement<R: Rng + ?Sized>(
        &self,
        count: usize,
        exclude: &[&BTreeSet<Pair>],
        rng: &mut R,
    ) -> Vec<Pair> {
        let all: Vec<Pair> = self.enumerate().into_iter().filter(|&p| self.is_candidate(p, exclude)).collect();
        if all.is_empty() {
            return Vec::new();
        }
        let mut out: Vec<Pair> = (0..count).map(|_| all[rng.random_range(0..all.len())]).collect();
        out.sort_unstable();
        out
    }
}

/// Number of same-layer node pairs within `nodes` that are not intra-layer edges.
pub fn intra_non_edge_count(graph: &MultiplexGraph, nodes: &[usize]) -> usize {
    PairUniverse::new(graph, PairClass::Intra, nodes).candidate_count(&[])
}

/// Number of cross-layer node pairs within `nodes` that are not inter-layer edges.
pub fn inter_non_edge_count(graph: &MultiplexGraph, nodes: &[usize]) -> usize {
    PairUniverse::new(graph, PairClass::Inter, nodes).candidate_count(&[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_multiplex, ClosurePolicy};
    use crate::rng;

    fn toy() -> MultiplexGraph {
        // layer 0: 0..4, layer 1: 4..7
        let intra = [Pair(0, 1), Pair(1, 2), Pair(4, 5)];
        let inter = [Pair(0, 4), Pair(1, 5)];
        build_multiplex(vec![0, 0, 0, 0, 1, 1, 1], &intra, &inter, ClosurePolicy::Strict).unwrap()
    }

    #[test]
    fn universe_sizes() {
        let g = toy();
        let intra = PairUniverse::all_nodes(&g, PairClass::Intra);
        assert_eq!(intra.size(), 6 + 3);
        assert_eq!(intra.candidate_count(&[]), 9 - 3);
        let inter = PairUniverse::all_nodes(&g, PairClass::Inter);
        assert_eq!(inter.size(), 12);
        assert_eq!(inter.candidate_count(&[]), 10);
    }

    #[test]
    fn sample_respects_exclusions() {
        let g = toy();
        let inter = PairUniverse::all_nodes(&g, PairClass::Inter);
        let ex: BTreeSet<Pair> = [Pair(0, 5), Pair(0, 6)].into_iter().collect();
        let mut r = rng::rng(1, "t", 0);
        let got = inter.sample(100, &[&ex], &mut r);
        assert_eq!(got.len(), 8);
        assert!(got.iter().all(|p| !ex.contains(p) && !g.has_inter_edge(p.0, p.1)));
        let again = inter.sample(3, &[&ex], &mut rng::rng(1, "t", 0));
        assert_eq!(again, inter.sample(3, &[&ex], &mut rng::rng(1, "t", 0)));
    }

    #[test]
    fn rejection_draws_stay_in_class() {
        let g = toy();
        let mut r = rng::rng(3, "t", 0);
        for class in [PairClass::Intra, PairClass::Inter] {
            let u = PairUniverse::all_nodes(&g, class);
            for _ in 0..200 {
                assert!(u.contains(u.draw(&mut r)));
            }
        }
    }
}
