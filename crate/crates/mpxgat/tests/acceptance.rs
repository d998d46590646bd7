//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails. Pass criterion names as arguments to run a subset.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use mpxgat::run;
use mpxgat_core::autodiff::{grad_check, GradCheckConfig, ParameterSet, Tape, Tensor};
use mpxgat_core::eval::{
    ablation_report, auc, auc_brute_force, welch_t_test, AblationRepetition, AblationReport, ExperimentConfig,
    ExperimentReport,
};
use mpxgat_core::graph::{
    build_multiplex, generate_split, inter_non_edge_count, one_hot_features, synthetic_multiplex, Adjacency,
    ClosurePolicy, MultiplexGraph, NegPolicy, Pair, PairClass, SplitConfig, SyntheticSpec,
};
use mpxgat_core::model::{
    FusionParams, Forward, GatLayer, LayerInput, ModelConfig, ModelVariant, Mpxgat, Stage, Topology, VLayer,
};
use mpxgat_core::rng::rng;
use mpxgat_core::train::{link_loss, train_observed, LabeledPairs, TrainConfig};
use rand::Rng as _;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_spec(r: &mut mpxgat_core::rng::Rng, max_nodes: usize, seed: u64) -> SyntheticSpec {
    let layers = r.random_range(1..=3usize);
    let per = max_nodes / layers;
    SyntheticSpec {
        layer_sizes: (0..layers).map(|_| r.random_range(2..=per)).collect(),
        intra_density: r.random_range(0.0..0.4),
        inter_coverage: r.random_range(0.0..1.0),
        planted_correlation: r.random_range(0.0..1.0),
        communities: r.random_range(1..4),
        community_strength: 0.7,
        seed,
    }
}

fn small_model() -> ModelConfig {
    ModelConfig {
        horizontal_dims: vec![4, 3],
        vertical_dims: vec![4, 3],
        heads_hidden: 2,
        heads_final: 2,
        dropout_attention: 0.0,
        ..ModelConfig::default()
    }
}

fn gradient_fidelity() -> Outcome {
    let g = synthetic_multiplex(&SyntheticSpec {
        layer_sizes: vec![15, 15],
        intra_density: 0.25,
        inter_coverage: 0.7,
        planted_correlation: 0.5,
        seed: 1,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let f = one_hot_features(&g);
    let topo = Topology::new(&g.message_graph()).unwrap();
    let start = Instant::now();
    let m = Mpxgat::new(ModelConfig { beta_init: 0.3, ..small_model() }, &f, 2, 7).unwrap();
    let intra: Vec<Pair> = g.intra_edges().collect();
    let inter: Vec<Pair> = g.inter_edges().collect();
    let neg_intra = [Pair::new(0, 14), Pair::new(16, 29)];
    let neg_inter = [Pair::new(0, 29), Pair::new(3, 20)];
    let a = LabeledPairs::new(&intra, &neg_intra);
    let b = LabeledPairs::new(&inter, &neg_inter);
    let forward = |p: &ParameterSet, t: &mut Tape| {
        let e = m.forward(t, p, &topo, &f, None)?;
        Ok(link_loss(t, &e, &a, &b)?.expect("non-empty batches"))
    };
    let cfg = GradCheckConfig { eps: 1e-5, samples_per_param: usize::MAX, ..GradCheckConfig::default() };
    let report = grad_check(m.params(), forward, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let groups: BTreeSet<&str> = report.per_param.iter().map(|w| w.param.rsplit('.').next().unwrap()).collect();
    let expected: BTreeSet<&str> = ["w_i", "w_j", "v_i", "v_j", "b_i", "b_j", "z_h", "b_h", "v_h", "beta"].into();
    let worst = report.worst().unwrap();
    outcome(
        report.max_rel_error < 1e-4 && groups == expected && report.per_param.len() == m.params().len() && secs < 60.0,
        format!(
            "max rel error {:.2e} (at {}[{}]) over {} coordinates of {} tensors, groups {:?}, {secs:.1}s",
            report.max_rel_error,
            worst.param,
            worst.index,
            report.coordinates,
            report.per_param.len(),
            groups
        ),
    )
}

fn neighborhood(adj: &Adjacency, node: usize) -> BTreeSet<usize> {
    if adj.degree(node) == 0 {
        [node].into()
    } else {
        adj.neighbors(node).iter().copied().collect()
    }
}

/// Same nodes, foreign-layer intra edges thinned and extended, no inter edges.
fn foreign_edit(g: &MultiplexGraph, keep: usize, r: &mut mpxgat_core::rng::Rng) -> MultiplexGraph {
    let mut intra: Vec<Pair> = g.intra_edges().filter(|p| g.layer_of(p.0) == keep || r.random_bool(0.5)).collect();
    for _ in 0..g.node_count() {
        let (u, v) = (r.random_range(0..g.node_count()), r.random_range(0..g.node_count()));
        if u != v && g.layer_of(u) == g.layer_of(v) && g.layer_of(u) != keep {
            intra.push(Pair::new(u, v));
        }
    }
    build_multiplex(g.node_layers().to_vec(), &intra, &[], ClosurePolicy::Strict).unwrap()
}

fn attention_invariants() -> Outcome {
    let mut r = rng(0, "acceptance-attention", 0);
    let (mut segments, mut worst, mut bad_support, mut bad_local) = (0usize, 0.0f64, 0usize, 0usize);
    for i in 0..100 {
        let g = synthetic_multiplex(&random_spec(&mut r, 50, i)).unwrap();
        let f = one_hot_features(&g);
        let m = Mpxgat::new(small_model(), &f, g.layer_count(), i).unwrap();
        let topo = Topology::new(&g.message_graph()).unwrap();
        let mut tape = Tape::new();
        let e = m.forward(&mut tape, m.params(), &topo, &f, None).unwrap();
        for tr in &e.attention {
            let w = tape.value(tr.weights).as_slice();
            for s in 0..tr.segments.segment_count() {
                let (node, adj, global): (usize, &Adjacency, Vec<usize>) = match tr.stage {
                    Stage::Horizontal { layer, .. } => {
                        let nodes = g.layer_nodes(layer).to_vec();
                        (nodes[s], g.intra(), nodes)
                    }
                    Stage::Vertical { .. } => (s, g.inter(), (0..g.node_count()).collect()),
                };
                let support: BTreeSet<usize> = tr.segments.range(s).map(|k| global[tr.segments.sources()[k]]).collect();
                let nonzero = tr.segments.range(s).filter(|&k| w[k] != 0.0).map(|k| global[tr.segments.sources()[k]]);
                let nb = neighborhood(adj, node);
                if support != nb || !nonzero.collect::<BTreeSet<_>>().is_subset(&nb) {
                    bad_support += 1;
                }
                let total: f64 = tr.segments.range(s).map(|k| w[k]).sum();
                worst = worst.max((total - 1.0).abs());
                segments += 1;
            }
        }
        let base = m.embed(&topo, &f).unwrap();
        for keep in 0..g.layer_count() {
            let edited = foreign_edit(&g, keep, &mut r);
            let other = m.embed(&Topology::new(&edited.message_graph()).unwrap(), &f).unwrap();
            for &u in g.layer_nodes(keep) {
                let same = base.horizontal.row(u).iter().zip(other.horizontal.row(u)).all(|(a, b)| a.to_bits() == b.to_bits());
                if !same {
                    bad_local += 1;
                }
            }
        }
    }
    outcome(
        worst <= 1e-12 && bad_support == 0 && bad_local == 0,
        format!("{segments} segments on 100 graphs: max |sum - 1| {worst:.1e}, support mismatches {bad_support}, horizontal rows changed by foreign edits {bad_local}"),
    )
}

fn degeneration() -> Outcome {
    let mut r = rng(0, "acceptance-degeneration", 0);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for i in 0..20u64 {
        let g = synthetic_multiplex(&SyntheticSpec {
            layer_sizes: vec![10, 8, 6],
            intra_density: 0.3,
            inter_coverage: 0.5 + 0.025 * i as f64,
            seed: i,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let topo = Topology::new(&g.message_graph()).unwrap();
        let n = g.node_count();
        let (din, dh, dout) = (5, 4, 3);
        for (heads, is_final) in [(2, false), (3, true), (1, true)] {
            let mut params = ParameterSet::new();
            let gat = GatLayer::new(&mut params, "v.l0", din, dout, heads, is_final, &mut r).unwrap();
            let fusion = FusionParams::new(&mut params, "v.l0.fusion", dh, dout, 0.0, &mut r).unwrap();
            for id in params.ids() {
                params.get_mut(id).as_mut_slice().iter_mut().for_each(|x| *x += r.random_range(-0.5..0.5));
            }
            let beta = params.id_of("v.l0.fusion.beta").unwrap();
            params.get_mut(beta).as_mut_slice()[0] = 0.0;
            let layer = VLayer { gat: gat.clone(), fusion };
            let x = Tensor::from_vec(n, din, (0..n * din).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
            let h = Tensor::from_vec(n, dh, (0..n * dh).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
            let mut tape = Tape::new();
            let xv = tape.constant(x).unwrap();
            let hv = tape.constant(h).unwrap();
            let deg = tape.constant(topo.degree().clone()).unwrap();
            let mut fw = Forward { tape: &mut tape, params: &params, rng: None };
            let (fused, _) = layer
                .forward(&mut fw, LayerInput::Dense(xv), topo.vertical(), deg, hv, 0.2, 0.0, false)
                .unwrap();
            let (plain, _) = gat.forward(&mut fw, LayerInput::Dense(xv), topo.vertical(), 0.2, 0.0).unwrap();
            worst = worst.max(tape.value(fused).max_abs_diff(tape.value(plain)));
            cases += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{cases} layers with beta = 0: max |vertical - plain| {worst:.1e}"))
}

fn auc_oracle() -> Outcome {
    let mut r = rng(0, "acceptance-auc", 0);
    let (mut worst, mut worst_monotone) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let levels = r.random_range(2..40i64);
        let (np, nn) = (r.random_range(1..60), r.random_range(1..60));
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| r.random_range(-levels..=levels) as f64 / 8.0).collect() };
        let (pos, neg) = (draw(np), draw(nn));
        let a = auc(&pos, &neg).unwrap();
        worst = worst.max((a - auc_brute_force(&pos, &neg).unwrap()).abs());
        let t = |xs: &[f64]| xs.iter().map(|x| x * x * x + 5.0 * x - 2.0).collect::<Vec<_>>();
        worst_monotone = worst_monotone.max((a - auc(&t(&pos), &t(&neg)).unwrap()).abs());
    }
    outcome(
        worst <= 1e-12 && worst_monotone <= 1e-12,
        format!("1000 tied instances: max |rank - brute force| {worst:.1e}, max |AUC - AUC(monotone)| {worst_monotone:.1e}"),
    )
}

fn split_violations(g: &MultiplexGraph, cfg: &SplitConfig, seed: u64) -> Result<usize, String> {
    let s = generate_split(g, cfg, seed).map_err(|e| e.to_string())?;
    let mut bad = 0;
    if s != generate_split(g, cfg, seed).unwrap() {
        bad += 1;
    }
    let marked: BTreeSet<usize> = s.marked_nodes.iter().copied().collect();
    let mut seen = BTreeSet::new();
    for class in [PairClass::Intra, PairClass::Inter] {
        let edges: BTreeSet<Pair> = match class {
            PairClass::Intra => g.intra_edges().collect(),
            PairClass::Inter => g.inter_edges().collect(),
        };
        let (tp, tn) = s.test_pairs(class);
        let (rp, rn) = s.train_pairs(class);
        let pos: BTreeSet<Pair> = tp.iter().chain(rp).copied().collect();
        bad += usize::from(pos != edges || pos.len() != tp.len() + rp.len());
        for p in tn.iter().chain(rn) {
            let right_class = (g.layer_of(p.0) == g.layer_of(p.1)) == (class == PairClass::Intra);
            bad += usize::from(edges.contains(p) || p.0 == p.1 || !right_class);
        }
        for p in tp.iter().chain(tn) {
            bad += usize::from(!(marked.contains(&p.0) && marked.contains(&p.1)));
        }
        for p in tp.iter().chain(tn).chain(rp).chain(rn) {
            bad += usize::from(!seen.insert(*p));
        }
    }
    for p in g.inter_edges() {
        let both = marked.contains(&p.0) && marked.contains(&p.1);
        bad += usize::from(both != s.test_pos_inter.contains(&p));
    }
    if cfg.neg_policy == NegPolicy::Exhaustive {
        bad += usize::from(s.test_neg_inter.len() != inter_non_edge_count(g, &s.marked_nodes));
    }
    Ok(bad)
}

fn leak_count(g: &MultiplexGraph, seed: u64) -> usize {
    let split = generate_split(g, &SplitConfig::default(), seed).unwrap();
    let test_pos: BTreeSet<Pair> = split.test_pos_intra.iter().chain(&split.test_pos_inter).copied().collect();
    let test_all = split.test_set();
    let cfg = TrainConfig {
        epochs: 3,
        seed,
        model: ModelConfig { horizontal_dims: vec![4], vertical_dims: vec![4], heads_hidden: 1, ..ModelConfig::default() },
        ..TrainConfig::default()
    };
    let f = one_hot_features(g);
    let mut leaks = 0;
    train_observed(g, &f, &split, &cfg, &mut |v| {
        leaks += v.message.intra().edges().chain(v.message.inter().edges()).filter(|p| test_pos.contains(p)).count();
        for b in [v.intra, v.inter, v.validation_intra, v.validation_inter] {
            leaks += b.pairs.iter().filter(|p| test_all.contains(p)).count();
        }
    })
    .unwrap();
    leaks
}

fn split_protocol() -> Outcome {
    let mut r = rng(0, "acceptance-split", 0);
    let (mut violations, mut errors, mut leaks) = (0, Vec::new(), 0);
    for i in 0..50u64 {
        let layers = r.random_range(2..=3usize);
        let g = synthetic_multiplex(&SyntheticSpec {
            layer_sizes: (0..layers).map(|_| r.random_range(40..80)).collect(),
            intra_density: r.random_range(0.05..0.3),
            inter_coverage: r.random_range(0.6..1.0),
            planted_correlation: r.random_range(0.0..1.0),
            communities: r.random_range(1..4),
            seed: i,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let neg_policy = if i % 5 == 4 { NegPolicy::Exhaustive } else { NegPolicy::Sampled };
        match split_violations(&g, &SplitConfig { neg_policy, ..SplitConfig::default() }, i) {
            Ok(v) => violations += v,
            Err(e) => errors.push(format!("graph {i}: {e}")),
        }
        if i % 5 == 0 {
            leaks += leak_count(&g, i);
        }
    }
    outcome(
        violations == 0 && errors.is_empty() && leaks == 0,
        format!("50 graphs: invariant violations {violations}, split errors {errors:?}, test pairs reaching training {leaks}"),
    )
}

fn planted_graph() -> MultiplexGraph {
    synthetic_multiplex(&SyntheticSpec {
        layer_sizes: vec![300, 300],
        intra_density: 0.03,
        planted_correlation: 0.9,
        inter_coverage: 0.5,
        communities: 8,
        community_strength: 0.8,
        seed: 0,
    })
    .unwrap()
}

fn planted_config(variant: ModelVariant) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.train.lr = 0.01;
    cfg.train.epochs = 300;
    cfg.train.patience = 50;
    cfg.train.model = ModelConfig {
        horizontal_dims: vec![32, 32],
        vertical_dims: vec![32, 32],
        heads_hidden: 4,
        heads_final: 1,
        dropout_attention: 0.5,
        variant,
        ..ModelConfig::default()
    };
    cfg
}

struct Planted {
    full: ExperimentReport,
    full_secs: f64,
    ablation: AblationReport,
}

fn planted() -> &'static Planted {
    static CELL: OnceLock<Planted> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = planted_graph();
        let f = one_hot_features(&g);
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        let start = Instant::now();
        let full = run::experiment(&g, &f, &planted_config(ModelVariant::Full), workers).unwrap();
        let full_secs = start.elapsed().as_secs_f64();
        let ablated = run::experiment(&g, &f, &planted_config(ModelVariant::NoHorizontal), workers).unwrap();
        let reps = full
            .repetitions
            .iter()
            .zip(&ablated.repetitions)
            .map(|(a, b)| AblationRepetition { full: a.clone(), ablated: b.clone() })
            .collect();
        let ablation = ablation_report(ModelVariant::NoHorizontal, reps).unwrap();
        Planted { full, full_secs, ablation }
    })
}

fn learning_signal() -> Outcome {
    let p = planted();
    let (intra, inter) = (p.full.intra.unwrap(), p.full.inter.unwrap());
    outcome(
        inter.mean >= 0.75 && intra.mean >= 0.70 && p.full.repetitions.len() == 10 && p.full_secs < 600.0,
        format!(
            "planted 2x300 (8 communities): inter AUC {:.4} ± {:.4} (>= 0.75), intra AUC {:.4} ± {:.4} (>= 0.70), 10 reps in {:.0}s",
            inter.mean, inter.std, intra.mean, intra.std, p.full_secs
        ),
    )
}

fn ablation_direction() -> Outcome {
    let a = &planted().ablation;
    let w = a.welch;
    outcome(
        a.paired == 10 && a.ablated_not_better >= 8 && w.is_some_and(|w| w.p_value.is_finite()),
        format!(
            "no-horizontal inter AUC <= full in {}/{} pairs (>= 8), full {:.4} vs ablated {:.4}, Welch t {:.3} df {:.2} p {:.3e}",
            a.ablated_not_better,
            a.paired,
            a.full.inter.unwrap().mean,
            a.ablated.inter.unwrap().mean,
            w.map_or(f64::NAN, |w| w.t),
            w.map_or(f64::NAN, |w| w.df),
            w.map_or(f64::NAN, |w| w.p_value),
        ),
    )
}

/// Samples a and b with reference t, df and two-sided p.
type Reference = (&'static [f64], &'static [f64], f64, f64, f64);

fn statistics() -> Outcome {
    // Two classic unequal-variance examples; reference values from an
    // established statistics package.
    let cases: [Reference; 2] = [
        (
            &[27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4],
            &[27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4],
            -2.455356398286006,
            24.988529290231416,
            0.021378001462866985,
        ),
        (
            &[19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0],
            &[28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7, 23.2, 17.5, 20.6, 18.0, 23.9, 21.6, 24.3, 20.4, 23.9, 13.3],
            -2.225512039969852,
            24.524634944257343,
            0.035484530830010325,
        ),
    ];
    let mut worst = 0.0f64;
    for (a, b, t, df, p) in cases {
        let w = welch_t_test(a, b).unwrap();
        worst = worst.max((w.t - t).abs()).max((w.df - df).abs()).max((w.p_value - p).abs());
    }
    let same = [0.81, 0.79, 0.85, 0.77, 0.80];
    let p_same = welch_t_test(&same, &same).unwrap().p_value;
    outcome(
        worst <= 1e-6 && p_same == 1.0,
        format!("max deviation from reference t/df/p {worst:.1e}, identical samples p = {p_same}"),
    )
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_mpxgat"))
        .args(args)
        .current_dir(dir)
        .env("MPXGAT_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr).trim()))
    }
}

fn determinism() -> Outcome {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let runs: [&[&str]; 5] = [
        &["synth", "--layers", "50,40", "--intra-density", "0.1", "--inter-coverage", "0.8", "--correlation", "0.7", "--seed", "3", "--out", "g"],
        &["train", "--graph", "g/graph.mpxg", "--epochs", "10", "--seed", "5", "--out", "train"],
        &["experiment", "--nodes", "g/nodes.txt", "--intra", "g/intra.txt", "--inter", "g/inter.txt", "--reps", "3", "--epochs", "6", "--out", "exp"],
        &["ablate", "--graph", "g/graph.mpxg", "--reps", "2", "--epochs", "5", "--mode", "random-horizontal", "--out", "abl"],
        &["gridsearch", "--graph", "g/graph.mpxg", "--epochs", "3", "--out", "grid"],
    ];
    let mut compared = 0;
    let mut failures = Vec::new();
    for args in runs {
        let out = args[args.len() - 1];
        if let Err(e) = cli(d, args) {
            failures.push(e);
            continue;
        }
        let again = format!("{out}-replay");
        if let Err(e) = cli(d, &["replay", &format!("{out}/manifest.json"), "--out", &again]) {
            failures.push(e);
            continue;
        }
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join(out).join("manifest.json")).unwrap()).unwrap();
        for f in m["outputs"].as_array().unwrap() {
            let f = f.as_str().unwrap();
            if fs::read(d.join(out).join(f)).ok() != fs::read(d.join(&again).join(f)).ok() {
                failures.push(format!("{out}/{f} differs"));
            }
            compared += 1;
        }
    }
    outcome(failures.is_empty(), format!("{compared} output files over 5 commands replayed byte-identical; failures {failures:?}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient-fidelity", gradient_fidelity),
        ("attention-invariants", attention_invariants),
        ("degeneration", degeneration),
        ("auc-oracle", auc_oracle),
        ("split-protocol", split_protocol),
        ("learning-signal", learning_signal),
        ("ablation-direction", ablation_direction),
        ("statistics", statistics),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
