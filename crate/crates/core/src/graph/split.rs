//! Marked-node train/test partition for link prediction.
//!
//! A random subset of nodes is marked. Test positives are a fraction of the
//! intra-layer links among marked nodes plus every inter-layer link among
//! them; everything else is a training positive. Negatives are non-edges of
//! the matching class, test negatives drawn among marked nodes.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::sampling::{PairClass, PairUniverse};
use super::{MultiplexGraph, Pair};
use crate::{rng, Error, Result};

/// Largest graph for which exhaustive test negatives are allowed.
pub const EXHAUSTIVE_NODE_LIMIT: usize = 2_000;
/// Redraws attempted when a split holds no test positives of some class.
pub const MAX_REDRAWS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegPolicy {
    /// Uniform sample without replacement, a fixed multiple of the positives.
    #[default]
    Sampled,
    /// Every inter-layer non-edge among marked nodes, and the intra test
    /// fraction of every intra-layer non-edge among them.
    Exhaustive,
}

/// Which intra-layer links are eligible as test positives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraScope {
    /// Only links with both endpoints marked.
    #[default]
    Marked,
    /// Any intra-layer link.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptySplitPolicy {
    /// Redraw the marked set with `seed + 1`, up to [`MAX_REDRAWS`] times.
    #[default]
    Resample,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub marked_fraction: f64,
    pub intra_test_fraction: f64,
    pub neg_policy: NegPolicy,
    /// Training negatives per training positive.
    pub train_neg_ratio: usize,
    /// Test negatives per test positive under [`NegPolicy::Sampled`].
    pub test_neg_ratio: usize,
    pub intra_scope: IntraScope,
    pub on_empty: EmptySplitPolicy,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            marked_fraction: 0.2,
            intra_test_fraction: 0.2,
            neg_policy: NegPolicy::Sampled,
            train_neg_ratio: 1,
            test_neg_ratio: 10,
            intra_scope: IntraScope::Marked,
            on_empty: EmptySplitPolicy::Resample,
        }
    }
}

impl SplitConfig {
    fn check(&self) -> Result<()> {
        for (name, v) in [("marked_fraction", self.marked_fraction), ("intra_test_fraction", self.intra_test_fraction)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(name, format!("{v} is not in (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Seed requested by the caller.
    pub seed: u64,
    /// Number of redraws needed; the marked set was drawn with `seed + attempt`.
    pub attempt: u32,
    pub marked_nodes: Vec<usize>,
    pub train_pos_intra: Vec<Pair>,
    pub train_pos_inter: Vec<Pair>,
    pub test_pos_intra: Vec<Pair>,
    pub test_pos_inter: Vec<Pair>,
    pub train_neg_intra: Vec<Pair>,
    pub train_neg_inter: Vec<Pair>,
    pub test_neg_intra: Vec<Pair>,
    pub test_neg_inter: Vec<Pair>,
}

impl SplitSpec {
    pub fn test_pairs(&self, class: PairClass) -> (&[Pair], &[Pair]) {
        match class {
            PairClass::Intra => (&self.test_pos_intra, &self.test_neg_intra),
            PairClass::Inter => (&self.test_pos_inter, &self.test_neg_inter),
        }
    }

    pub fn train_pairs(&self, class: PairClass) -> (&[Pair], &[Pair]) {
        match class {
            PairClass::Intra => (&self.train_pos_intra, &self.train_neg_intra),
            PairClass::Inter => (&self.train_pos_inter, &self.train_neg_inter),
        }
    }

    /// All test pairs of both classes, positive and negative.
    pub fn test_set(&self) -> BTreeSet<Pair> {
        self.test_pos_intra
            .iter()
            .chain(&self.test_pos_inter)
            .chain(&self.test_neg_intra)
            .chain(&self.test_neg_inter)
            .copied()
            .collect()
    }

    /// Checks every split invariant against `graph`.
    pub fn verify(&self, graph: &MultiplexGraph) -> Result<()> {
        let fail = |why: alloc::string::String| Err(Error::invalid("split", why));
        let marked: BTreeSet<usize> = self.marked_nodes.iter().copied().collect();
        if marked.len() != self.marked_nodes.len() {
            return fail("duplicate marked nodes".into());
        }
        let mut seen = BTreeSet::new();
        let lists: [(&str, &[Pair]); 8] = [
            ("train_pos_intra", &self.train_pos_intra),
            ("train_pos_inter", &self.train_pos_inter),
            ("test_pos_intra", &self.test_pos_intra),
            ("test_pos_inter", &self.test_pos_inter),
            ("train_neg_intra", &self.train_neg_intra),
            ("train_neg_inter", &self.train_neg_inter),
            ("test_neg_intra", &self.test_neg_intra),
            ("test_neg_inter", &self.test_neg_inter),
        ];
        for (name, list) in lists {
            for &p in list {
                if !p.is_canonical() || p.0 == p.1 || p.1 >= graph.node_count() {
                    return fail(format!("{name} holds malformed pair {p:?}"));
                }
                if !seen.insert(p) {
                    return fail(format!("{p:?} appears in more than one example set ({name})"));
                }
                let same_layer = graph.layer_of(p.0) == graph.layer_of(p.1);
                let intra = name.ends_with("intra");
                if same_layer != intra {
                    return fail(format!("{name} pair {p:?} has the wrong layer relation"));
                }
                let is_edge = if intra { graph.has_intra_edge(p.0, p.1) } else { graph.has_inter_edge(p.0, p.1) };
                let positive = name.contains("pos");
                if is_edge != positive {
                    return fail(format!("{name} pair {p:?} edge status is {is_edge}"));
                }
                if name.starts_with("test") && !positive && !(marked.contains(&p.0) && marked.contains(&p.1)) {
                    return fail(format!("test negative {p:?} leaves the marked set"));
                }
            }
        }
        if self.train_pos_intra.len() + self.test_pos_intra.len() != graph.intra_edge_count() {
            return fail("intra positives do not cover the intra edge set".into());
        }
        if self.train_pos_inter.len() + self.test_pos_inter.len() != graph.inter_edge_count() {
            return fail("inter positives do not cover the inter edge set".into());
        }
        let test_inter: BTreeSet<Pair> = self.test_pos_inter.iter().copied().collect();
        for p in graph.inter_edges() {
            let both = marked.contains(&p.0) && marked.contains(&p.1);
            if both != test_inter.contains(&p) {
                return fail(format!("inter edge {p:?} misplaced (both marked: {both})"));
            }
        }
        Ok(())
    }
}

/// Generates a marked-node split. Deterministic in `(graph, config, seed)`.
pub fn generate_split(graph: &MultiplexGraph, config: &SplitConfig, seed: u64) -> Result<SplitSpec> {
    config.check()?;
    if config.neg_policy == NegPolicy::Exhaustive && graph.node_count() > EXHAUSTIVE_NODE_LIMIT {
        return Err(Error::ExhaustiveTooLarge { nodes: graph.node_count(), limit: EXHAUSTIVE_NODE_LIMIT });
    }
    let mut attempt = 0;
    loop {
        match draw(graph, config, seed, attempt)? {
            Ok(split) => return Ok(split),
            Err(class) => {
                if config.on_empty == EmptySplitPolicy::Error || attempt >= MAX_REDRAWS {
                    return Err(Error::EmptyTestSet { class, attempts: attempt + 1 });
                }
                log::debug!("split seed {} has no {class} test positives, redrawing", seed.wrapping_add(attempt.into()));
                attempt += 1;
            }
        }
    }
}

fn draw(
    graph: &MultiplexGraph,
    config: &SplitConfig,
    seed: u64,
    attempt: u32,
) -> Result<core::result::Result<SplitSpec, &'static str>> {
    let n = graph.node_count();
    let mut rng = rng::rng(seed.wrapping_add(u64::from(attempt)), "split", 0);
    let marked_count = libm::floor(config.marked_fraction * n as f64) as usize;
    let mut marked_nodes = index::sample(&mut rng, n, marked_count).into_vec();
    marked_nodes.sort_unstable();
    let mut is_marked = alloc::vec![false; n];
    for &u in &marked_nodes {
        is_marked[u] = true;
    }
    let both_marked = |p: &Pair| is_marked[p.0] && is_marked[p.1];

    let mut eligible: Vec<Pair> = match config.intra_scope {
        IntraScope::Marked => graph.intra_edges().filter(both_marked).collect(),
        IntraScope::Global => graph.intra_edges().collect(),
    };
    let take = libm::round(config.intra_test_fraction * eligible.len() as f64) as usize;
    let (chosen, _) = eligible.partial_shuffle(&mut rng, take);
    let mut test_pos_intra = chosen.to_vec();
    test_pos_intra.sort_unstable();
    let test_pos_inter: Vec<Pair> = graph.inter_edges().filter(both_marked).collect();

    if graph.intra_edge_count() > 0 && test_pos_intra.is_empty() {
        return Ok(Err("intra"));
    }
    if graph.inter_edge_count() > 0 && test_pos_inter.is_empty() {
        return Ok(Err("inter"));
    }

    let test_intra_set: BTreeSet<Pair> = test_pos_intra.iter().copied().collect();
    let train_pos_intra: Vec<Pair> = graph.intra_edges().filter(|p| !test_intra_set.contains(p)).collect();
    let train_pos_inter: Vec<Pair> = graph.inter_edges().filter(|p| !both_marked(p)).collect();

    let mut neg = |class: PairClass, test_pos: usize, train_pos: usize| -> (Vec<Pair>, Vec<Pair>) {
        let marked_universe = PairUniverse::new(graph, class, &marked_nodes);
        let test_count = match config.neg_policy {
            NegPolicy::Sampled => test_pos * config.test_neg_ratio,
            NegPolicy::Exhaustive => {
                let available = marked_universe.candidate_count(&[]);
                match class {
                    PairClass::Intra => libm::round(config.intra_test_fraction * available as f64) as usize,
                    PairClass::Inter => available,
                }
            }
        };
        let test = marked_universe.sample(test_count, &[], &mut rng);
        if test.len() < test_count {
            log::warn!("only {} of {} {} test negatives available", test.len(), test_count, class.name());
        }
        let test_set: BTreeSet<Pair> = test.iter().copied().collect();
        let train_count = train_pos * config.train_neg_ratio;
        let train = PairUniverse::all_nodes(graph, class).sample(train_count, &[&test_set], &mut rng);
        if train.len() < train_count {
            log::warn!("only {} of {} {} train negatives available", train.len(), train_count, class.name());
        }
        (test, train)
    };
    let (test_neg_intra, train_neg_intra) = neg(PairClass::Intra, test_pos_intra.len(), train_pos_intra.len());
    let (test_neg_inter, train_neg_inter) = neg(PairClass::Inter, test_pos_inter.len(), train_pos_inter.len());

    Ok(Ok(SplitSpec {
        seed,
        attempt,
        marked_nodes,
        train_pos_intra,
        train_pos_inter,
        test_pos_intra,
        test_pos_inter,
        train_neg_intra,
        train_neg_inter,
        test_neg_intra,
        test_neg_inter,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{synthetic_multiplex, SyntheticSpec};

    fn graph() -> MultiplexGraph {
        synthetic_multiplex(&SyntheticSpec {
            layer_sizes: alloc::vec![40, 40],
            intra_density: 0.15,
            inter_coverage: 0.8,
            planted_correlation: 0.5,
            seed: 7,
            ..SyntheticSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn defaults_follow_protocol() {
        let c = SplitConfig::default();
        assert_eq!((c.marked_fraction, c.intra_test_fraction), (0.2, 0.2));
    }

    #[test]
    fn split_is_valid_and_deterministic() {
        let g = graph();
        let c = SplitConfig::default();
        let a = generate_split(&g, &c, 11).unwrap();
        a.verify(&g).unwrap();
        assert_eq!(a.marked_nodes.len(), 16);
        assert_eq!(a, generate_split(&g, &c, 11).unwrap());
        assert_ne!(a.marked_nodes, generate_split(&g, &c, 12).unwrap().marked_nodes);
        assert_eq!(a.test_neg_inter.len(), 10 * a.test_pos_inter.len());
        assert_eq!(a.train_neg_intra.len(), a.train_pos_intra.len());
    }

    #[test]
    fn rejects_bad_fractions() {
        let g = graph();
        let c = SplitConfig { marked_fraction: 1.0, ..SplitConfig::default() };
        assert!(matches!(generate_split(&g, &c, 0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn empty_inter_test_set_errors_without_resampling() {
        // one inter edge; marking 20% of 10 nodes rarely catches both ends
        let g = crate::graph::build_multiplex(
            alloc::vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1],
            &[Pair(0, 1), Pair(1, 2), Pair(2, 3), Pair(3, 4), Pair(5, 6), Pair(6, 7), Pair(7, 8), Pair(8, 9)],
            &[Pair(0, 5)],
            crate::graph::ClosurePolicy::Strict,
        )
        .unwrap();
        let strict = SplitConfig { on_empty: EmptySplitPolicy::Error, ..SplitConfig::default() };
        let failures = (0..20).filter(|&s| generate_split(&g, &strict, s).is_err()).count();
        assert!(failures > 0);
        let err = (0..20).find_map(|s| generate_split(&g, &strict, s).err()).unwrap();
        assert!(matches!(err, Error::EmptyTestSet { attempts: 1, .. }));
    }
}
