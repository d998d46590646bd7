//! Aligned TSV tables and JSON report documents.

use std::fmt::Write as _;

use mpxgat_core::eval::{AblationReport, ExperimentReport, Repetition, Summary, TestScores, WelchTest};
use mpxgat_core::model::ModelVariant;
use mpxgat_core::train::GridReport;
use serde::Serialize;

use crate::config::RunConfig;
use crate::ingest::GraphStats;

/// Tab-separated table whose cells are space-padded to a common width per
/// column, so it reads aligned in a terminal and still splits on tabs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let last = r.len() - 1;
            for (i, c) in r.iter().enumerate() {
                if i == last {
                    out.push_str(c);
                } else {
                    write!(out, "{c:<w$}\t", w = width[i]).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn fmt_auc(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn fmt_summary(s: Option<Summary>) -> String {
    s.map_or_else(|| "-".into(), |s| format!("{:.4} ± {:.4}", s.mean, s.std))
}

pub fn variant_name(v: ModelVariant) -> &'static str {
    match v {
        ModelVariant::Full => "MPXGAT",
        ModelVariant::NoHorizontal => "GAT (no horizontal)",
        ModelVariant::RandomHorizontal => "MPXGAT (random horizontal)",
    }
}

/// Machine-readable report: everything needed to rerun plus the result.
#[derive(Debug, Clone, Serialize)]
pub struct Document<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub graph: &'a GraphStats,
    pub result: &'a T,
}

pub fn scores_table(s: &TestScores) -> Table {
    let mut t = Table::new(&["class", "auc", "positives", "negatives"]);
    for (name, c) in [("intra", s.intra), ("inter", s.inter)] {
        match c {
            Some(c) => t.push(vec![name.into(), fmt_auc(Some(c.auc)), c.positives.to_string(), c.negatives.to_string()]),
            None => t.push(vec![name.into(), "-".into(), "0".into(), "0".into()]),
        }
    }
    t.push(vec!["overall".into(), fmt_auc(Some(s.overall)), "-".into(), "-".into()]);
    t
}

pub fn repetitions_table(reps: &[Repetition]) -> Table {
    let mut t = Table::new(&["rep", "split_seed", "train_seed", "intra_auc", "inter_auc", "overall_auc", "best_epoch", "epochs"]);
    for r in reps {
        t.push(vec![
            r.index.to_string(),
            r.split_seed.to_string(),
            r.train_seed.to_string(),
            fmt_auc(r.scores.intra.map(|c| c.auc)),
            fmt_auc(r.scores.inter.map(|c| c.auc)),
            fmt_auc(Some(r.scores.overall)),
            r.best_epoch.map_or_else(|| "-".into(), |e| e.to_string()),
            r.epochs_run.to_string(),
        ]);
    }
    t
}

/// One row per model: mean ± std of each AUC.
pub fn summary_table(reports: &[&ExperimentReport]) -> Table {
    let mut t = Table::new(&["model", "intra_auc", "inter_auc", "overall_auc", "reps"]);
    for r in reports {
        t.push(vec![
            variant_name(r.variant).into(),
            fmt_summary(r.intra),
            fmt_summary(r.inter),
            fmt_summary(r.overall),
            r.repetitions.len().to_string(),
        ]);
    }
    t
}

pub fn paired_table(r: &AblationReport) -> Table {
    let mut t = Table::new(&["rep", "split_seed", "full_inter", "ablated_inter", "full_intra", "ablated_intra"]);
    for (a, b) in r.full.repetitions.iter().zip(&r.ablated.repetitions) {
        t.push(vec![
            a.index.to_string(),
            a.split_seed.to_string(),
            fmt_auc(a.scores.inter.map(|c| c.auc)),
            fmt_auc(b.scores.inter.map(|c| c.auc)),
            fmt_auc(a.scores.intra.map(|c| c.auc)),
            fmt_auc(b.scores.intra.map(|c| c.auc)),
        ]);
    }
    t
}

pub fn welch_table(w: Option<WelchTest>, not_better: usize, paired: usize) -> Table {
    let mut t = Table::new(&["t", "df", "p_value", "ablated_not_better", "paired"]);
    let (a, b, c) = match w {
        Some(w) => (format!("{:.6}", w.t), format!("{:.6}", w.df), format!("{:.6e}", w.p_value)),
        None => ("-".into(), "-".into(), "-".into()),
    };
    t.push(vec![a, b, c, not_better.to_string(), paired.to_string()]);
    t
}

pub fn grid_table(r: &GridReport) -> Table {
    let mut t = Table::new(&["rank", "lr", "hidden", "heads", "dropout", "validation_auc", "best_epoch", "error"]);
    for (i, c) in r.leaderboard.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            c.point.lr.to_string(),
            c.point.hidden.to_string(),
            c.point.heads.to_string(),
            c.point.dropout.to_string(),
            fmt_auc(c.validation),
            c.best_epoch.map_or_else(|| "-".into(), |e| e.to_string()),
            c.error.clone().unwrap_or_else(|| "-".into()),
        ]);
    }
    t
}

pub fn stats_table(s: &GraphStats) -> Table {
    let mut t = Table::new(&["nodes", "layers", "intra_edges", "inter_edges", "edges", "avg_degree(edges/N)", "avg_degree(2*edges/N)"]);
    t.push(vec![
        s.nodes.to_string(),
        s.layers.to_string(),
        s.intra_edges.to_string(),
        s.inter_edges.to_string(),
        s.edges.to_string(),
        format!("{:.2}", s.avg_degree_edges_per_node),
        format!("{:.2}", s.avg_degree_endpoints_per_node),
    ]);
    t
}
