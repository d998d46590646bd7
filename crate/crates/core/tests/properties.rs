use std::collections::{BTreeMap, BTreeSet};

use mpxgat_core::autodiff::Tape;
use mpxgat_core::graph::*;
use mpxgat_core::model::{ModelConfig, Mpxgat, Stage, Topology};
use mpxgat_core::ErrorKind;
use proptest::prelude::*;

fn spec_strategy(max_nodes: usize) -> impl Strategy<Value = SyntheticSpec> {
    (1usize..=4, 0.0f64..0.4, 0.0f64..1.0, 0.0f64..1.0, 1usize..4, any::<u64>()).prop_flat_map(
        move |(layers, density, coverage, correlation, communities, seed)| {
            let per = (max_nodes / layers).max(1);
            prop::collection::vec(1..=per, layers).prop_map(move |sizes| SyntheticSpec {
                layer_sizes: sizes,
                intra_density: density,
                inter_coverage: coverage,
                planted_correlation: correlation,
                communities,
                community_strength: 0.7,
                seed,
            })
        },
    )
}

/// Independent check of every structural invariant.
fn check_invariants(g: &MultiplexGraph) {
    let n = g.node_count();
    for u in 0..n {
        assert!(g.layer_of(u) < g.layer_count());
        for (adj, intra) in [(g.intra(), true), (g.inter(), false)] {
            let nb = adj.neighbors(u);
            assert!(nb.windows(2).all(|w| w[0] < w[1]), "sorted, no duplicates");
            for &v in nb {
                assert_ne!(u, v);
                assert!(adj.neighbors(v).contains(&u), "symmetric");
                assert_eq!(g.layer_of(u) == g.layer_of(v), intra);
            }
        }
        // Inter neighborhoods: one node per foreign layer, and neighbors are
        // pairwise linked (clique components).
        let nb = g.inter().neighbors(u);
        let layers: BTreeSet<usize> = nb.iter().map(|&v| g.layer_of(v)).collect();
        assert_eq!(layers.len(), nb.len());
        for &a in nb {
            for &b in nb {
                if a != b {
                    assert!(g.has_inter_edge(a, b), "closure");
                }
            }
        }
    }
}

/// Component labels by repeated min-label propagation until a fixpoint.
fn brute_components(g: &MultiplexGraph) -> Vec<usize> {
    let mut label: Vec<usize> = (0..g.node_count()).collect();
    loop {
        let mut changed = false;
        for u in 0..g.node_count() {
            for &v in g.intra().neighbors(u).iter().chain(g.inter().neighbors(u)) {
                if label[v] < label[u] {
                    label[u] = label[v];
                    changed = true;
                }
            }
        }
        if !changed {
            return label;
        }
    }
}

fn random_edges(n: usize, count: usize) -> impl Strategy<Value = Vec<Pair>> {
    prop::collection::vec((0..n, 0..n).prop_map(|(a, b)| Pair(a, b)), 0..count)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthetic_graphs_hold_invariants(spec in spec_strategy(60)) {
        let g = synthetic_multiplex(&spec).unwrap();
        check_invariants(&g);
        g.validate().unwrap();
    }

    #[test]
    fn arbitrary_edge_lists_are_validated_or_rejected(
        layers in prop::collection::vec(0usize..3, 2..15),
        intra in random_edges(16, 20),
        inter in random_edges(16, 8),
    ) {
        let n = layers.len();
        for policy in [ClosurePolicy::Strict, ClosurePolicy::Close] {
            match build_multiplex(layers.clone(), &intra, &inter, policy) {
                Ok(g) => {
                    check_invariants(&g);
                    prop_assert_eq!(g.node_count(), n);
                    for p in &intra {
                        prop_assert!(g.has_intra_edge(p.0, p.1));
                    }
                    for p in &inter {
                        prop_assert!(g.has_inter_edge(p.0, p.1));
                    }
                    if policy == ClosurePolicy::Strict {
                        let given: BTreeSet<Pair> = inter.iter().map(|p| Pair::new(p.0, p.1)).collect();
                        prop_assert_eq!(g.inter_edge_count(), given.len());
                    }
                }
                Err(e) => prop_assert_eq!(e.kind(), ErrorKind::Input),
            }
        }
    }

    #[test]
    fn lcc_is_the_largest_component(spec in spec_strategy(200)) {
        let g = synthetic_multiplex(&spec).unwrap();
        let c = largest_connected_component(&g).unwrap();
        let labels = brute_components(&g);
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in &labels {
            *sizes.entry(l).or_default() += 1;
        }
        let max = *sizes.values().max().unwrap();
        // Labels are component minima, so the first maximal label holds the smallest id.
        let winner = *sizes.iter().find(|(_, &s)| s == max).unwrap().0;
        let expect: Vec<usize> = (0..g.node_count()).filter(|&u| labels[u] == winner).collect();
        prop_assert_eq!(&c.original, &expect);
        check_invariants(&c.graph);
        let edges_in = |edges: Vec<Pair>| edges.into_iter().filter(|p| labels[p.0] == winner).count();
        prop_assert_eq!(c.graph.intra_edge_count(), edges_in(g.intra_edges().collect()));
        prop_assert_eq!(c.graph.inter_edge_count(), edges_in(g.inter_edges().collect()));
        for p in c.graph.intra_edges() {
            prop_assert!(g.has_intra_edge(c.original[p.0], c.original[p.1]));
        }
        for (new, &old) in c.original.iter().enumerate() {
            prop_assert_eq!(c.graph.layer_of(new), g.layer_of(old));
        }
        prop_assert_eq!(brute_components(&c.graph).iter().collect::<BTreeSet<_>>().len(), 1);
    }

    #[test]
    fn splits_partition_and_stay_valid(spec in spec_strategy(80), seed in any::<u64>()) {
        let g = synthetic_multiplex(&spec).unwrap();
        let cfg = SplitConfig::default();
        let Ok(s) = generate_split(&g, &cfg, seed) else { return Ok(()); };
        prop_assert_eq!(&s, &generate_split(&g, &cfg, seed).unwrap());
        let marked: BTreeSet<usize> = s.marked_nodes.iter().copied().collect();
        prop_assert_eq!(marked.len(), (0.2 * g.node_count() as f64).floor() as usize);
        for class in [PairClass::Intra, PairClass::Inter] {
            let (tp, tn) = s.test_pairs(class);
            let (rp, rn) = s.train_pairs(class);
            let edges: BTreeSet<Pair> = match class {
                PairClass::Intra => g.intra_edges().collect(),
                PairClass::Inter => g.inter_edges().collect(),
            };
            let pos: BTreeSet<Pair> = tp.iter().chain(rp).copied().collect();
            prop_assert_eq!(pos.len(), tp.len() + rp.len());
            prop_assert_eq!(&pos, &edges);
            for p in tn.iter().chain(rn) {
                prop_assert!(!edges.contains(p) && p.0 != p.1);
                prop_assert_eq!(g.layer_of(p.0) == g.layer_of(p.1), class == PairClass::Intra);
            }
            for p in tp.iter().chain(tn) {
                prop_assert!(marked.contains(&p.0) && marked.contains(&p.1));
            }
        }
        for p in g.inter_edges() {
            let both = marked.contains(&p.0) && marked.contains(&p.1);
            prop_assert_eq!(both, s.test_pos_inter.contains(&p));
        }
        let all: Vec<Pair> = [&s.train_pos_intra, &s.train_pos_inter, &s.test_pos_intra, &s.test_pos_inter,
            &s.train_neg_intra, &s.train_neg_inter, &s.test_neg_intra, &s.test_neg_inter]
            .into_iter().flatten().copied().collect();
        prop_assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), all.len());
    }

    #[test]
    fn attention_is_normalized_and_horizontal_is_local(spec in spec_strategy(50), seed in any::<u64>()) {
        let g = synthetic_multiplex(&spec).unwrap();
        let f = one_hot_features(&g);
        let cfg = ModelConfig { horizontal_dims: vec![4, 3], vertical_dims: vec![4, 3], heads_hidden: 2, heads_final: 2, ..ModelConfig::default() };
        let m = Mpxgat::new(cfg, &f, g.layer_count(), seed).unwrap();
        let mg = g.message_graph();
        let topo = Topology::new(&mg).unwrap();
        let mut tape = Tape::new();
        let e = m.forward(&mut tape, m.params(), &topo, &f, None).unwrap();
        for tr in &e.attention {
            let w = tape.value(tr.weights).as_slice();
            for s in 0..tr.segments.segment_count() {
                let (node, adj, to_global): (usize, &Adjacency, Box<dyn Fn(usize) -> usize>) = match tr.stage {
                    Stage::Horizontal { layer, .. } => {
                        let nodes = g.layer_nodes(layer).to_vec();
                        (nodes[s], g.intra(), Box::new(move |i| nodes[i]))
                    }
                    Stage::Vertical { .. } => (s, g.inter(), Box::new(|i| i)),
                };
                let sources: BTreeSet<usize> = tr.segments.range(s).map(|i| to_global(tr.segments.sources()[i])).collect();
                let expect: BTreeSet<usize> = if adj.degree(node) == 0 { [node].into() } else { adj.neighbors(node).iter().copied().collect() };
                prop_assert_eq!(sources, expect);
                let total: f64 = tr.segments.range(s).map(|i| w[i]).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
            }
        }
        // Remove every inter edge and every intra edge outside layer 0.
        let inter: Vec<Pair> = g.inter_edges().collect();
        let foreign: Vec<Pair> = g.intra_edges().filter(|p| g.layer_of(p.0) != 0).collect();
        let base = m.embed(&topo, &f).unwrap();
        let edited = m.embed(&Topology::new(&g.message_graph_excluding(&foreign, &inter)).unwrap(), &f).unwrap();
        for &u in g.layer_nodes(0) {
            prop_assert_eq!(base.horizontal.row(u), edited.horizontal.row(u));
        }
        let no_inter = m.embed(&Topology::new(&g.message_graph_excluding(&[], &inter)).unwrap(), &f).unwrap();
        prop_assert_eq!(&base.horizontal, &no_inter.horizontal);
    }
}
