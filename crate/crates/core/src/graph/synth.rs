//! Synthetic multiplex generator for desk-scale experiments.
//!
//! Each layer is a planted-partition random graph: nodes carry one of
//! `communities` labels and a pair is linked with probability `p_in` inside a
//! community and `p_out` across, chosen so the expected density equals
//! `intra_density` and a `community_strength` share of the expected edges
//! falls inside communities. With one community this is Erdős–Rényi.
//!
//! Inter-layer structure comes from *units*: `inter_coverage · min_layer_size`
//! groups holding one node per layer, linked into a clique. Units share one
//! community label across layers. For two unit nodes on a layer other than 0,
//! with probability `planted_correlation` the pair copies the edge status of
//! the same two units on layer 0; otherwise it is drawn fresh.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_multiplex, ClosurePolicy, MultiplexGraph, Pair};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub layer_sizes: Vec<usize>,
    pub intra_density: f64,
    pub inter_coverage: f64,
    pub planted_correlation: f64,
    pub communities: usize,
    pub community_strength: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            layer_sizes: vec![100, 100],
            intra_density: 0.05,
            inter_coverage: 0.5,
            planted_correlation: 0.0,
            communities: 1,
            community_strength: 0.8,
            seed: 0,
        }
    }
}

struct Blocks {
    p_in: f64,
    p_out: f64,
}

impl Blocks {
    fn new(labels: &[usize], communities: usize, density: f64, strength: f64) -> Self {
        let n = labels.len() as f64;
        let total = n * (n - 1.0) / 2.0;
        let mut sizes = vec![0usize; communities];
        for &c in labels {
            sizes[c] += 1;
        }
        let within: f64 = sizes.iter().map(|&s| (s * s.saturating_sub(1) / 2) as f64).sum();
        let between = total - within;
        let expected = density * total;
        if communities <= 1 || between <= 0.0 || within <= 0.0 {
            return Blocks { p_in: density, p_out: density };
        }
        let p_in = (strength * expected / within).min(1.0);
        let p_out = ((expected - p_in * within) / between).clamp(0.0, 1.0);
        Blocks { p_in, p_out }
    }

    fn prob(&self, same: bool) -> f64 {
        if same {
            self.p_in
        } else {
            self.p_out
        }
    }
}

fn check_ratio(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(name, alloc::format!("{v} is not in [0, 1]")));
    }
    Ok(())
}

/// Generates a synthetic multiplex graph. Node ids are assigned layer by
/// layer: layer 0 holds ids `0..layer_sizes[0]`, and so on.
pub fn synthetic_multiplex(spec: &SyntheticSpec) -> Result<MultiplexGraph> {
    check_ratio("intra_density", spec.intra_density)?;
    check_ratio("planted_correlation", spec.planted_correlation)?;
    check_ratio("community_strength", spec.community_strength)?;
    if spec.inter_coverage < 0.0 || spec.inter_coverage.is_nan() {
        return Err(Error::invalid("inter_coverage", "must be non-negative"));
    }
    if spec.layer_sizes.is_empty() {
        return Err(Error::invalid("layer_sizes", "at least one layer required"));
    }
    let communities = spec.communities.max(1);
    let min_size = *spec.layer_sizes.iter().min().unwrap();
    let units = libm::round(spec.inter_coverage * min_size as f64) as usize;
    if units > min_size {
        return Err(Error::InfeasibleCoverage { requested: units, available: min_size });
    }
    let units = if spec.layer_sizes.len() < 2 { 0 } else { units };

    let mut r = rng::rng(spec.seed, "synthetic", 0);
    let mut offsets = Vec::with_capacity(spec.layer_sizes.len());
    let mut node_layer = Vec::new();
    for (k, &size) in spec.layer_sizes.iter().enumerate() {
        offsets.push(node_layer.len());
        node_layer.extend(core::iter::repeat_n(k, size));
    }

    // unit_nodes[k][u] = local index of unit u on layer k
    let unit_nodes: Vec<Vec<usize>> = spec
        .layer_sizes
        .iter()
        .map(|&size| {
            let mut locals: Vec<usize> = (0..size).collect();
            locals.shuffle(&mut r);
            locals.truncate(units);
            locals
        })
        .collect();
    let unit_label: Vec<usize> = (0..units).map(|_| r.random_range(0..communities)).collect();

    let mut labels: Vec<Vec<usize>> = Vec::new();
    let mut unit_of: Vec<Vec<Option<usize>>> = Vec::new();
    for (k, &size) in spec.layer_sizes.iter().enumerate() {
        let mut lab: Vec<usize> = (0..size).map(|_| r.random_range(0..communities)).collect();
        let mut owner = vec![None; size];
        for (u, &local) in unit_nodes[k].iter().enumerate() {
            lab[local] = unit_label[u];
            owner[local] = Some(u);
        }
        labels.push(lab);
        unit_of.push(owner);
    }

    let mut intra = Vec::new();
    let mut layer0_edges: Vec<Vec<bool>> = Vec::new();
    for (k, &size) in spec.layer_sizes.iter().enumerate() {
        let blocks = Blocks::new(&labels[k], communities, spec.intra_density, spec.community_strength);
        let mut edge = vec![vec![false; size]; size];
        for a in 0..size {
            for b in a + 1..size {
                let copy = match (k, unit_of[k][a], unit_of[k][b]) {
                    (k, Some(ua), Some(ub)) if k > 0 && r.random_bool(spec.planted_correlation) => {
                        Some(layer0_edges[unit_nodes[0][ua]][unit_nodes[0][ub]])
                    }
                    _ => None,
                };
                let linked = match copy {
                    Some(v) => v,
                    None => r.random_bool(blocks.prob(labels[k][a] == labels[k][b])),
                };
                if linked {
                    edge[a][b] = true;
                    edge[b][a] = true;
                    intra.push(Pair(offsets[k] + a, offsets[k] + b));
                }
            }
        }
        if k == 0 {
            layer0_edges = edge;
        }
    }

    let mut inter = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for u in 0..units {
        for k in 0..spec.layer_sizes.len() {
            for q in k + 1..spec.layer_sizes.len() {
                inter.push(Pair(offsets[k] + unit_nodes[k][u], offsets[q] + unit_nodes[q][u]));
            }
        }
    }

    build_multiplex(node_layer, &intra, &inter, ClosurePolicy::Strict)
}
