use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::autodiff::{grad_check, GradCheckConfig};
use crate::graph::{build_multiplex, one_hot_features, synthetic_multiplex, ClosurePolicy, MultiplexGraph, Pair, SyntheticSpec};

fn small() -> MultiplexGraph {
    synthetic_multiplex(&SyntheticSpec {
        layer_sizes: vec![12, 10],
        intra_density: 0.25,
        inter_coverage: 0.6,
        planted_correlation: 0.5,
        seed: 3,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

fn tiny_config(variant: ModelVariant) -> ModelConfig {
    ModelConfig {
        horizontal_dims: vec![6, 4],
        vertical_dims: vec![5, 3],
        heads_hidden: 2,
        heads_final: 2,
        variant,
        ..ModelConfig::default()
    }
}

fn loss_on(model: &Mpxgat, params: &ParameterSet, tape: &mut Tape, topo: &Topology, g: &MultiplexGraph) -> Result<Var> {
    let f = one_hot_features(g);
    let e = model.forward(tape, params, topo, &f, None)?;
    let intra: Vec<Pair> = g.intra_edges().collect();
    let inter: Vec<Pair> = g.inter_edges().collect();
    let neg = [Pair::new(0, 1), Pair::new(2, 15)];
    let a = crate::train::LabeledPairs::new(&intra, &neg[..1]);
    let b = crate::train::LabeledPairs::new(&inter, &neg[1..]);
    Ok(crate::train::link_loss(tape, &e, &a, &b)?.unwrap())
}

#[test]
fn shapes_and_parameter_groups() {
    let g = small();
    let f = one_hot_features(&g);
    let m = Mpxgat::new(tiny_config(ModelVariant::Full), &f, 2, 0).unwrap();
    let topo = Topology::new(&g.message_graph()).unwrap();
    let e = m.embed(&topo, &f).unwrap();
    assert_eq!(e.horizontal.shape(), [22, 4]);
    assert_eq!(e.vertical.shape(), [22, 3]);
    assert!(m.params().id_of("h0.l0.head1.w_i").is_some());
    assert!(m.params().id_of("h1.l1.head0.b_j").is_some());
    assert!(m.params().id_of("v.l1.fusion.beta").is_some());
    assert_eq!(m.params().by_name("v.l0.fusion.beta").unwrap().item(), 0.5);
}

#[test]
fn shared_horizontal_weights_use_one_stack() {
    let g = small();
    let f = one_hot_features(&g);
    let own = Mpxgat::new(tiny_config(ModelVariant::Full), &f, 2, 0).unwrap();
    let shared = Mpxgat::new(ModelConfig { share_horizontal_weights: true, ..tiny_config(ModelVariant::Full) }, &f, 2, 0).unwrap();
    assert!(shared.params().id_of("h.l0.head0.w_i").is_some());
    assert!(shared.params().len() < own.params().len());
}

#[test]
fn no_horizontal_has_no_fusion() {
    let g = small();
    let f = one_hot_features(&g);
    let m = Mpxgat::new(tiny_config(ModelVariant::NoHorizontal), &f, 2, 0).unwrap();
    assert!(m.fusion().is_empty());
    assert!(m.params().iter().all(|(_, n, _)| !n.contains("fusion")));
}

#[test]
fn end_to_end_gradients() {
    let g = small();
    let f = one_hot_features(&g);
    let topo = Topology::new(&g.message_graph()).unwrap();
    for variant in [ModelVariant::Full, ModelVariant::NoHorizontal, ModelVariant::RandomHorizontal] {
        let m = Mpxgat::new(ModelConfig { dropout_attention: 0.0, ..tiny_config(variant) }, &f, 2, 1).unwrap();
        let report = grad_check(m.params(), |p, t| loss_on(&m, p, t, &topo, &g), &GradCheckConfig::default()).unwrap();
        assert!(report.max_rel_error < 1e-4, "{variant:?}: {:?}", report.worst());
    }
}

#[test]
fn one_hot_matches_dense_identity() {
    let g = small();
    let topo = Topology::new(&g.message_graph()).unwrap();
    let hot = one_hot_features(&g);
    let dense = FeatureMatrix::dense(Tensor::identity(g.node_count()));
    let m = Mpxgat::new(tiny_config(ModelVariant::Full), &hot, 2, 4).unwrap();
    let a = m.embed(&topo, &hot).unwrap();
    let b = m.embed(&topo, &dense).unwrap();
    assert!(a.horizontal.max_abs_diff(&b.horizontal) < 1e-12);
    assert!(a.vertical.max_abs_diff(&b.vertical) < 1e-12);
}

#[test]
fn zero_beta_reduces_to_plain_attention() {
    let g = small();
    let f = one_hot_features(&g);
    let topo = Topology::new(&g.message_graph()).unwrap();
    let full = Mpxgat::new(ModelConfig { beta_init: 0.0, ..tiny_config(ModelVariant::Full) }, &f, 2, 9).unwrap();
    let plain = Mpxgat::new(tiny_config(ModelVariant::NoHorizontal), &f, 2, 9).unwrap();
    let a = full.embed(&topo, &f).unwrap();
    let b = plain.embed(&topo, &f).unwrap();
    assert!(a.vertical.max_abs_diff(&b.vertical) <= 1e-9);
    assert_eq!(a.horizontal, b.horizontal);
}

#[test]
fn horizontal_ignores_inter_edges() {
    let g = small();
    let f = one_hot_features(&g);
    let m = Mpxgat::new(tiny_config(ModelVariant::Full), &f, 2, 2).unwrap();
    let with = m.embed(&Topology::new(&g.message_graph()).unwrap(), &f).unwrap();
    let inter: Vec<Pair> = g.inter_edges().collect();
    let without = m.embed(&Topology::new(&g.message_graph_excluding(&[], &inter)).unwrap(), &f).unwrap();
    assert_eq!(with.horizontal, without.horizontal);
    assert_ne!(with.vertical, without.vertical);
}

#[test]
fn random_horizontal_decouples_vertical_from_horizontal_weights() {
    let g = small();
    let f = one_hot_features(&g);
    let topo = Topology::new(&g.message_graph()).unwrap();
    let mut m = Mpxgat::new(tiny_config(ModelVariant::RandomHorizontal), &f, 2, 2).unwrap();
    assert_eq!(m.random_horizontal().unwrap().shape(), [22, 4]);
    let before = m.embed(&topo, &f).unwrap();
    let id = m.params().id_of("h0.l0.head0.w_j").unwrap();
    m.params_mut().get_mut(id).as_mut_slice().iter_mut().for_each(|x| *x += 1.0);
    let after = m.embed(&topo, &f).unwrap();
    assert_eq!(before.vertical, after.vertical);
    assert_ne!(before.horizontal, after.horizontal);
}

#[test]
fn attention_covers_neighborhoods_and_sums_to_one() {
    let g = build_multiplex(
        vec![0, 0, 0, 1, 1],
        &[Pair(0, 1), Pair(3, 4)],
        &[Pair(0, 3)],
        ClosurePolicy::Strict,
    )
    .unwrap();
    let f = one_hot_features(&g);
    let topo = Topology::new(&g.message_graph()).unwrap();
    // Node 2 is isolated in its layer and in the vertical network.
    assert_eq!(topo.layers()[0].segments.sources(), &[1, 0, 2]);
    assert_eq!(topo.vertical().sources(), &[3, 1, 2, 0, 4]);
    let m = Mpxgat::new(tiny_config(ModelVariant::Full), &f, 2, 0).unwrap();
    let mut tape = Tape::new();
    let e = m.forward(&mut tape, m.params(), &topo, &f, None).unwrap();
    assert_eq!(e.attention.len(), 2 * (2 + 2) + 2 + 2);
    for tr in &e.attention {
        let w = tape.value(tr.weights);
        for s in 0..tr.segments.segment_count() {
            let total: f64 = tr.segments.range(s).map(|i| w.as_slice()[i]).sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn training_mode_dropout_is_seeded() {
    let g = small();
    let f = one_hot_features(&g);
    let topo = Topology::new(&g.message_graph()).unwrap();
    let m = Mpxgat::new(tiny_config(ModelVariant::Full), &f, 2, 0).unwrap();
    let run = |seed| {
        let mut t = Tape::new();
        let mut r = crate::rng::rng(seed, "dropout", 0);
        let e = m.forward(&mut t, m.params(), &topo, &f, Some(&mut r)).unwrap();
        t.value(e.vertical).clone()
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));
}

#[test]
fn invalid_configs_rejected() {
    let g = small();
    let f = one_hot_features(&g);
    for bad in [
        ModelConfig { horizontal_dims: vec![], ..ModelConfig::default() },
        ModelConfig { heads_final: 0, ..ModelConfig::default() },
        ModelConfig { dropout_attention: 1.0, ..ModelConfig::default() },
        ModelConfig { vertical_dims: vec![4, 0], ..ModelConfig::default() },
    ] {
        assert!(matches!(Mpxgat::new(bad, &f, 2, 0), Err(Error::InvalidParameter { .. })));
    }
}

#[test]
fn score_is_sigmoid_of_dot() {
    assert_eq!(score_edge(&[0.0, 0.0], &[1.0, 2.0]), 0.5);
    let s = score_edge(&[1.0, 2.0], &[0.5, -0.25]);
    assert!((s - 1.0 / (1.0 + libm::exp(-0.0))).abs() < 1e-15);
    let s = score_edge(&[1.0, 2.0], &[3.0, 0.5]);
    assert!((s - 1.0 / (1.0 + libm::exp(-4.0))).abs() < 1e-15);
}

#[test]
fn zero_gate_leaves_weighted_vertical_term() {
    let mut t = Tape::new();
    let h = t.constant(Tensor::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap()).unwrap();
    let z = t.constant(Tensor::identity(2)).unwrap();
    let b = t.constant(Tensor::zeros(1, 2)).unwrap();
    let v = t.constant(Tensor::zeros(2, 1)).unwrap();
    let m = f_transform(&mut t, h, z, b, v, 0.2).unwrap();
    assert_eq!(t.value(m), &Tensor::zeros(2, 2));
    let agg = t.constant(Tensor::from_rows(&[vec![2.0, 4.0], vec![-1.0, 1.0]]).unwrap()).unwrap();
    let beta = t.constant(Tensor::scalar(0.25)).unwrap();
    let out = g_combine(&mut t, agg, m, beta, false).unwrap();
    assert_eq!(t.value(out).as_slice(), &[1.5, 3.0, -0.75, 0.75]);
}

#[test]
fn f_matches_direct_formula() {
    let mut t = Tape::new();
    let h = t.constant(Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap()).unwrap();
    let z = t.constant(Tensor::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 1.0, -1.0]]).unwrap()).unwrap();
    let b = t.constant(Tensor::from_rows(&[vec![0.5, 0.0, 0.0]]).unwrap()).unwrap();
    let v = t.constant(Tensor::from_rows(&[vec![1.0], vec![-1.0], vec![1.0]]).unwrap()).unwrap();
    // x = (1.5, 2, 0); x·v = -0.5; LeakyReLU → -0.1; m = -0.1·x.
    let m = f_transform(&mut t, h, z, b, v, 0.2).unwrap();
    let got = t.value(m).as_slice();
    for (g, e) in got.iter().zip([-0.15, -0.2, 0.0]) {
        assert!((g - e).abs() < 1e-15);
    }
}

#[test]
fn beta_weights_clamp_and_relu() {
    let mut t = Tape::new();
    let a = t.constant(Tensor::filled(1, 2, 1.0)).unwrap();
    let m = t.constant(Tensor::filled(1, 2, 3.0)).unwrap();
    for (beta, clamp, expect) in [(-0.5, false, 1.0), (2.0, false, 5.0), (2.0, true, 3.0), (0.5, true, 2.0)] {
        let b = t.constant(Tensor::scalar(beta)).unwrap();
        let out = g_combine(&mut t, a, m, b, clamp).unwrap();
        assert_eq!(t.value(out).as_slice(), &[expect, expect], "beta {beta} clamp {clamp}");
    }
}
