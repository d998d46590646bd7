//! Command-line interface.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpxgat_core::eval::evaluate;
use mpxgat_core::graph::{
    generate_split, one_hot_features, synthetic_multiplex, ClosurePolicy, NegPolicy, SplitSpec, SyntheticSpec,
};
use mpxgat_core::model::{ModelVariant, Topology};
use mpxgat_core::train::train;
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::ingest::{self, Dataset, GraphStats, IdMap};
use crate::manifest::{self, RunManifest, Timings};
use crate::report::{self, Document, Table};
use crate::{archive, checkpoint, config, run, VERSION};

#[derive(Debug, Parser)]
#[command(name = "mpxgat", version, about = "Two-phase attention link prediction on multiplex graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse text edge lists into a binary graph archive.
    Ingest(IngestArgs),
    /// Generate a synthetic multiplex graph.
    Synth(SynthArgs),
    /// Draw a train/test split.
    Split(SplitArgs),
    /// Train one model and score it on the test split.
    Train(TrainArgs),
    /// Score a checkpoint on a split.
    Evaluate(EvaluateArgs),
    /// Repeated train/evaluate runs with mean and standard deviation.
    Experiment(ExperimentArgs),
    /// Paired comparison of the full model against an ablated variant.
    Ablate(ExperimentArgs),
    /// Hyperparameter grid search on one split.
    Gridsearch(GridArgs),
    /// Rerun a recorded run and compare its outputs byte for byte.
    Replay(ReplayArgs),
    /// Print the JSON schema of run config files.
    Schema,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClosureArg {
    Strict,
    Close,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NegPolicyArg {
    Sampled,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Full,
    NoHorizontal,
    RandomHorizontal,
}

impl From<ModeArg> for ModelVariant {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => ModelVariant::Full,
            ModeArg::NoHorizontal => ModelVariant::NoHorizontal,
            ModeArg::RandomHorizontal => ModelVariant::RandomHorizontal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Binary graph archive written by `ingest` or `synth`.
    #[arg(long, conflicts_with_all = ["nodes", "intra", "inter"])]
    pub graph: Option<PathBuf>,
    /// Node file: one `node_id layer_id` per line.
    #[arg(long, required_unless_present = "graph")]
    pub nodes: Option<PathBuf>,
    /// Intra-layer edges: `u v` per line.
    #[arg(long)]
    pub intra: Option<PathBuf>,
    /// Inter-layer edges: `u v` per line.
    #[arg(long)]
    pub inter: Option<PathBuf>,
    /// Keep only the largest connected component.
    #[arg(long)]
    pub lcc: bool,
    /// How to treat inter-layer components that are not cliques.
    #[arg(long, value_enum, default_value = "strict")]
    pub closure: ClosureArg,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON run config; see `mpxgat schema`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_enum)]
    pub neg_policy: Option<NegPolicyArg>,
    /// Model variant; for `ablate`, the variant compared against the full model.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Worker threads for repetitions and grid cells.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Comma-separated layer sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,100")]
    pub layers: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub intra_density: f64,
    /// Fraction of the smallest layer paired across layers.
    #[arg(long, default_value_t = 0.5)]
    pub inter_coverage: f64,
    /// Share of intra-layer edges copied between paired nodes.
    #[arg(long, default_value_t = 0.0)]
    pub correlation: f64,
    /// Planted communities, shared by paired nodes.
    #[arg(long, default_value_t = 1)]
    pub communities: usize,
    /// Fraction of intra-layer edges placed inside communities.
    #[arg(long, default_value_t = 0.8)]
    pub community_strength: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub lcc: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Repetition whose split seed to use.
    #[arg(long, default_value_t = 0)]
    pub rep: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Split file from `split`; drawn from `--rep` when absent.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Repetition whose split and training seeds to use.
    #[arg(long, default_value_t = 0)]
    pub rep: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Parameter container written by `train`; its `.json` sidecar must sit next to it.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub rep: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// `manifest.json` of the run to replay.
    pub manifest: PathBuf,
    /// Directory for the replayed outputs.
    #[arg(long)]
    pub out: PathBuf,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Synth(_) => "synth",
            Command::Split(_) => "split",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Experiment(_) => "experiment",
            Command::Ablate(_) => "ablate",
            Command::Gridsearch(_) => "gridsearch",
            Command::Replay(_) => "replay",
            Command::Schema => "schema",
        }
    }

    fn out(&self) -> Option<&Path> {
        match self {
            Command::Ingest(a) => Some(&a.out),
            Command::Synth(a) => Some(&a.out),
            Command::Split(a) => Some(&a.out),
            Command::Train(a) => Some(&a.out),
            Command::Evaluate(a) => Some(&a.out),
            Command::Experiment(a) | Command::Ablate(a) => Some(&a.out),
            Command::Gridsearch(a) => Some(&a.out),
            Command::Replay(_) | Command::Schema => None,
        }
    }
}

/// Output directory plus the bookkeeping that ends up in the manifest.
struct Session {
    out: PathBuf,
    files: Vec<String>,
    inputs: BTreeMap<String, String>,
    config_path: Option<String>,
    synthetic: Option<serde_json::Value>,
    seed: u64,
}

impl Session {
    fn new(out: &Path) -> Result<Self> {
        fs::create_dir_all(out).map_err(Error::io(out))?;
        Ok(Session {
            out: out.to_owned(),
            files: Vec::new(),
            inputs: BTreeMap::new(),
            config_path: None,
            synthetic: None,
            seed: 0,
        })
    }

    fn input(&mut self, role: &str, p: &Path) {
        self.inputs.insert(role.into(), p.display().to_string());
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.into());
        self.out.join(name)
    }

    fn text(&mut self, name: &str, s: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, s).map_err(Error::io(&p))
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        self.text(name, &t.to_tsv())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, v: &T) -> Result<()> {
        let p = self.path(name);
        let s = serde_json::to_string_pretty(v).map_err(Error::json(&p))? + "\n";
        fs::write(&p, s).map_err(Error::io(&p))
    }

    fn dataset(&mut self, g: &GraphArgs) -> Result<Dataset> {
        let policy = match g.closure {
            ClosureArg::Strict => ClosurePolicy::Strict,
            ClosureArg::Close => ClosurePolicy::Close,
        };
        let data = match (&g.graph, &g.nodes) {
            (Some(p), _) => {
                self.input("graph", p);
                archive::read(p)?
            }
            (None, Some(n)) => {
                self.input("nodes", n);
                if let Some(p) = &g.intra {
                    self.input("intra", p);
                }
                if let Some(p) = &g.inter {
                    self.input("inter", p);
                }
                ingest::read_text(n, g.intra.as_deref(), g.inter.as_deref(), policy)?
            }
            (None, None) => return Err(Error::Usage("either --graph or --nodes is required".into())),
        };
        let data = if g.lcc { data.largest_component()? } else { data };
        log::info!("graph: {} nodes, {} layers, {} edges", data.graph.node_count(), data.graph.layer_count(), data.graph.edge_count());
        Ok(data)
    }

    fn config(&mut self, r: &RunArgs) -> Result<RunConfig> {
        let mut cfg = match &r.config {
            Some(p) => {
                self.input("config", p);
                self.config_path = Some(p.display().to_string());
                RunConfig::load(p)?
            }
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: r.seed,
            repetitions: r.reps,
            lr: r.lr,
            epochs: r.epochs,
            neg_policy: r.neg_policy.map(|p| match p {
                NegPolicyArg::Sampled => NegPolicy::Sampled,
                NegPolicyArg::Exhaustive => NegPolicy::Exhaustive,
            }),
            variant: r.mode.map(Into::into),
        });
        self.seed = cfg.seed;
        Ok(cfg)
    }

    fn split(&mut self, data: &Dataset, cfg: &RunConfig, file: Option<&Path>, rep: usize) -> Result<SplitSpec> {
        match file {
            Some(p) => {
                self.input("split", p);
                let text = fs::read_to_string(p).map_err(Error::io(p))?;
                let s: SplitSpec = serde_json::from_str(&text).map_err(Error::json(p))?;
                s.verify(&data.graph)?;
                Ok(s)
            }
            None => Ok(generate_split(&data.graph, &cfg.split, cfg.experiment().split_seed(rep))?),
        }
    }

    fn graph_outputs(&mut self, data: &Dataset) -> Result<GraphStats> {
        let p = self.path("graph.mpxg");
        archive::write(&p, data)?;
        self.json("ids.json", &data.ids)?;
        let stats = GraphStats::of(&data.graph);
        self.json("stats.json", &stats)?;
        self.table("stats.tsv", &report::stats_table(&stats))?;
        Ok(stats)
    }
}

fn doc<'a, T: Serialize>(
    command: &'a str,
    cfg: &'a RunConfig,
    graph: &'a GraphStats,
    result: &'a T,
) -> Document<'a, T> {
    Document { command, version: VERSION, seed: cfg.seed, config: cfg, graph, result }
}

fn exec(cmd: &Command, s: &mut Session) -> Result<()> {
    match cmd {
        Command::Ingest(a) => {
            let data = s.dataset(&a.graph)?;
            s.graph_outputs(&data)?;
        }
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                layer_sizes: a.layers.clone(),
                intra_density: a.intra_density,
                inter_coverage: a.inter_coverage,
                planted_correlation: a.correlation,
                communities: a.communities,
                community_strength: a.community_strength,
                seed: a.seed,
            };
            s.synthetic = Some(serde_json::to_value(&spec).expect("spec serializes"));
            s.seed = a.seed;
            let graph = synthetic_multiplex(&spec)?;
            let ids = IdMap::identity(&graph);
            let data = Dataset { graph, ids };
            let data = if a.lcc { data.largest_component()? } else { data };
            let written = ingest::write_text(&s.out, &data)?;
            for p in written {
                s.files.push(p.file_name().unwrap().to_string_lossy().into_owned());
            }
            s.json("spec.json", &spec)?;
            s.graph_outputs(&data)?;
        }
        Command::Split(a) => {
            let data = s.dataset(&a.graph)?;
            let cfg = s.config(&a.run)?;
            let split = s.split(&data, &cfg, None, a.rep)?;
            s.json("split.json", &split)?;
        }
        Command::Train(a) => {
            let data = s.dataset(&a.graph)?;
            let cfg = s.config(&a.run)?;
            let split = s.split(&data, &cfg, a.split.as_deref(), a.rep)?;
            let features = one_hot_features(&data.graph);
            let mut tc = cfg.train.clone();
            tc.seed = cfg.experiment().train_seed(a.rep);
            let out = train(&data.graph, &features, &split, &tc)?;
            let scores = evaluate(&out.model, &out.topology, &features, &split)?;
            checkpoint::save(&s.path("model.bin"), &out.model, tc.seed)?;
            s.files.push("model.json".into());
            let mut log = String::new();
            for h in &out.history {
                let f = |x: Option<f64>| x.map_or_else(|| "-".into(), |v| format!("{v:.6}"));
                log.push_str(&format!(
                    "epoch {}\tloss {:.6}\tval_intra {}\tval_inter {}\tval {}\n",
                    h.epoch,
                    h.loss,
                    f(h.validation_intra),
                    f(h.validation_inter),
                    f(h.validation)
                ));
            }
            if let Some(b) = out.best_epoch {
                log.push_str(&format!("best epoch {b}{}\n", if out.stopped_early { " (stopped early)" } else { "" }));
            }
            s.text("progress.log", &log)?;
            s.json("history.json", &out.history)?;
            s.json("split.json", &split)?;
            s.json("scores.json", &scores)?;
            s.table("scores.tsv", &report::scores_table(&scores))?;
        }
        Command::Evaluate(a) => {
            let data = s.dataset(&a.graph)?;
            let split = s.split(&data, &RunConfig::default(), Some(&a.split), 0)?;
            let features = one_hot_features(&data.graph);
            s.input("checkpoint", &a.checkpoint);
            let model = checkpoint::load(&a.checkpoint, &features)?;
            let topo = Topology::new(&data.graph.message_graph_excluding(&split.test_pos_intra, &split.test_pos_inter))?;
            let scores = evaluate(&model, &topo, &features, &split)?;
            s.json("scores.json", &scores)?;
            s.table("scores.tsv", &report::scores_table(&scores))?;
        }
        Command::Experiment(a) => {
            let data = s.dataset(&a.graph)?;
            let cfg = s.config(&a.run)?;
            let features = one_hot_features(&data.graph);
            let rep = run::experiment(&data.graph, &features, &cfg.experiment(), a.run.workers)?;
            let stats = GraphStats::of(&data.graph);
            s.table("repetitions.tsv", &report::repetitions_table(&rep.repetitions))?;
            s.table("summary.tsv", &report::summary_table(&[&rep]))?;
            s.json("report.json", &doc("experiment", &cfg, &stats, &rep))?;
        }
        Command::Ablate(a) => {
            let ablated = a.run.mode.map_or(ModelVariant::NoHorizontal, Into::into);
            if ablated == ModelVariant::Full {
                return Err(Error::Usage("ablate needs --mode no-horizontal or random-horizontal".into()));
            }
            let data = s.dataset(&a.graph)?;
            let cfg = s.config(&a.run)?;
            let features = one_hot_features(&data.graph);
            let rep = run::ablation(&data.graph, &features, &cfg.experiment(), ablated, a.run.workers)?;
            let stats = GraphStats::of(&data.graph);
            s.table("paired.tsv", &report::paired_table(&rep))?;
            s.table("summary.tsv", &report::summary_table(&[&rep.full, &rep.ablated]))?;
            s.table("welch.tsv", &report::welch_table(rep.welch, rep.ablated_not_better, rep.paired))?;
            s.json("report.json", &doc("ablate", &cfg, &stats, &rep))?;
        }
        Command::Gridsearch(a) => {
            let data = s.dataset(&a.graph)?;
            let cfg = s.config(&a.run)?;
            let split = s.split(&data, &cfg, a.split.as_deref(), a.rep)?;
            let features = one_hot_features(&data.graph);
            let mut base = cfg.train.clone();
            base.seed = cfg.experiment().train_seed(a.rep);
            let grid = run::grid(&data.graph, &features, &split, &base, &cfg.grid, a.run.workers)?;
            let stats = GraphStats::of(&data.graph);
            s.table("leaderboard.tsv", &report::grid_table(&grid))?;
            s.json("report.json", &doc("gridsearch", &cfg, &stats, &grid))?;
            if let Some(best) = grid.best {
                let mut tuned = cfg.clone();
                tuned.train = best.apply(&cfg.train);
                s.json("best_config.json", &tuned)?;
            }
        }
        Command::Replay(_) | Command::Schema => unreachable!("handled by run"),
    }
    Ok(())
}

fn unix_ms(t: SystemTime) -> u128 {
    t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

/// Runs a parsed command. `args` are the raw arguments after the program
/// name, recorded in the manifest.
pub fn run(cli: &Cli, args: &[String]) -> Result<()> {
    match &cli.command {
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&config::schema()).expect("schema serializes"));
            Ok(())
        }
        Command::Replay(r) => replay(&r.manifest, &r.out),
        cmd => {
            let out = cmd.out().expect("command has --out");
            let started = SystemTime::now();
            let clock = Instant::now();
            let mut s = Session::new(out)?;
            exec(cmd, &mut s)?;
            let cwd = std::env::current_dir().map_err(Error::io(Path::new(".")))?;
            let m = RunManifest {
                command: cmd.name().into(),
                args: args.to_vec(),
                cwd: cwd.display().to_string(),
                inputs: s.inputs,
                config_path: s.config_path,
                synthetic: s.synthetic,
                seed: s.seed,
                out: out.display().to_string(),
                outputs: s.files,
                version: VERSION.into(),
                timings: Timings {
                    started_unix_ms: unix_ms(started),
                    finished_unix_ms: unix_ms(SystemTime::now()),
                    wall_seconds: clock.elapsed().as_secs_f64(),
                },
            };
            m.write(out)?;
            log::info!("{} finished in {:.1}s; outputs in {}", m.command, m.timings.wall_seconds, out.display());
            Ok(())
        }
    }
}

/// `args` with the value of `--out` replaced.
fn with_out(args: &[String], out: &str) -> Result<Vec<String>> {
    let mut res = Vec::with_capacity(args.len());
    let mut found = false;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
            res.extend(["--out".to_string(), out.to_string()]);
            found = true;
        } else if a.starts_with("--out=") {
            res.push(format!("--out={out}"));
            found = true;
        } else {
            res.push(a.clone());
        }
    }
    if !found {
        return Err(Error::ReplayMismatch("recorded arguments have no --out".into()));
    }
    Ok(res)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    if p.is_absolute() {
        return Ok(p.to_owned());
    }
    let cwd = std::env::current_dir().map_err(Error::io(Path::new(".")))?;
    Ok(cwd.join(p))
}

/// Reruns the manifest's command from its recorded working directory with
/// outputs sent to `out`, then compares every recorded output file.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<()> {
    let m = RunManifest::read(manifest_path)?;
    let out = absolute(out)?;
    let recorded = {
        let o = Path::new(&m.out);
        if o.is_absolute() {
            o.to_owned()
        } else {
            Path::new(&m.cwd).join(o)
        }
    };
    if recorded == out {
        return Err(Error::Usage("replay --out must differ from the recorded output directory".into()));
    }
    let args = with_out(&m.args, &out.display().to_string())?;
    let cli = Cli::try_parse_from(std::iter::once("mpxgat".to_string()).chain(args.iter().cloned()))
        .map_err(|e| Error::ReplayMismatch(format!("recorded arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_) | Command::Schema) {
        return Err(Error::ReplayMismatch(format!("cannot replay `{}`", m.command)));
    }
    let here = std::env::current_dir().map_err(Error::io(Path::new(".")))?;
    std::env::set_current_dir(&m.cwd).map_err(Error::io(Path::new(&m.cwd)))?;
    let result = run(&cli, &args);
    std::env::set_current_dir(&here).map_err(Error::io(&here))?;
    result?;
    let replayed = RunManifest::read(&out.join(manifest::FILE_NAME))?;
    if replayed.outputs != m.outputs {
        return Err(Error::ReplayMismatch(format!(
            "output file lists differ: recorded {:?}, replayed {:?}",
            m.outputs, replayed.outputs
        )));
    }
    let differ = manifest::compare_outputs(&recorded, &out, &m.outputs)?;
    if !differ.is_empty() {
        return Err(Error::ReplayMismatch(format!("outputs differ: {}", differ.join(", "))));
    }
    println!("replay identical: {} files", m.outputs.len());
    Ok(())
}
