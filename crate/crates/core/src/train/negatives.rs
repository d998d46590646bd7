use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::graph::{MultiplexGraph, Pair, PairClass, PairUniverse};
use crate::rng::rng;

/// Fresh training negatives for one epoch: `count` non-edges of `class` over
/// all nodes, avoiding every pair in `exclude`. Deterministic in
/// `(seed, epoch)`. When fewer candidates exist than requested, draws with
/// replacement and logs a warning.
pub fn resample_negatives(
    graph: &MultiplexGraph,
    class: PairClass,
    count: usize,
    exclude: &[&BTreeSet<Pair>],
    seed: u64,
    epoch: u64,
) -> Vec<Pair> {
    let tag = match class {
        PairClass::Intra => "negatives-intra",
        PairClass::Inter => "negatives-inter",
    };
    let mut r = rng(seed, tag, epoch);
    let universe = PairUniverse::all_nodes(graph, class);
    let drawn = universe.sample(count, exclude, &mut r);
    if drawn.len() < count {
        log::warn!("{} negatives saturated: {} candidates for {} requested", class.name(), drawn.len(), count);
        return universe.sample_with_replacement(count, exclude, &mut r);
    }
    drawn
}
