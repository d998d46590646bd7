//! Whitespace-separated edge-list ingestion.
//!
//! ```text
//! # nodes file: node_id layer
//! alice  social
//! bob    social
//! a1     work
//! # intra file: layer node_u node_v
//! social alice bob
//! # inter file: node_u node_v
//! alice a1
//! ```
//!
//! Node ids and layer labels are arbitrary tokens. Nodes get dense ids in
//! file order; layers are ordered numerically when every label is an integer
//! and lexicographically otherwise. The original tokens are kept in an
//! [`IdMap`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mpxgat_core::graph::{build_multiplex_with_layers, largest_connected_component, ClosurePolicy, MultiplexGraph, Pair};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Original labels of dense node and layer ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IdMap {
    pub nodes: Vec<String>,
    pub layers: Vec<String>,
}

impl IdMap {
    /// Decimal labels `0..n` for nodes and layers.
    pub fn identity(graph: &MultiplexGraph) -> Self {
        IdMap {
            nodes: (0..graph.node_count()).map(|i| i.to_string()).collect(),
            layers: (0..graph.layer_count()).map(|i| i.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: MultiplexGraph,
    pub ids: IdMap,
}

impl Dataset {
    /// Restricts to the largest connected component, carrying labels along.
    pub fn largest_component(&self) -> Result<Dataset> {
        let c = largest_connected_component(&self.graph)?;
        let nodes = c.original.iter().map(|&u| self.ids.nodes[u].clone()).collect();
        Ok(Dataset { graph: c.graph, ids: IdMap { nodes, layers: self.ids.layers.clone() } })
    }
}

fn format_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_owned(), line, message: message.into() }
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> + '_ {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn fields<'a, const N: usize>(path: &Path, line: usize, f: &[&'a str], what: &str) -> Result<[&'a str; N]> {
    f.try_into()
        .map_err(|_| format_error(path, line, format!("expected {N} fields ({what}), found {}", f.len())))
}

fn layer_order(labels: &[String]) -> Vec<String> {
    let mut sorted = labels.to_vec();
    if labels.iter().all(|l| l.parse::<i64>().is_ok()) {
        sorted.sort_by_key(|l| l.parse::<i64>().unwrap());
    } else {
        sorted.sort();
    }
    sorted
}

/// Parses the three files' contents. `paths` only label error messages.
pub fn parse_text(
    nodes: (&Path, &str),
    intra: Option<(&Path, &str)>,
    inter: Option<(&Path, &str)>,
    policy: ClosurePolicy,
) -> Result<Dataset> {
    let (np, ntext) = nodes;
    let mut node_index: HashMap<&str, usize> = HashMap::new();
    let mut node_labels = Vec::new();
    let mut node_layer_label = Vec::new();
    let mut seen_layers: Vec<String> = Vec::new();
    for (line, f) in records(ntext) {
        let [id, layer] = fields::<2>(np, line, &f, "node_id layer")?;
        if node_index.insert(id, node_labels.len()).is_some() {
            return Err(format_error(np, line, format!("node `{id}` declared twice")));
        }
        node_labels.push(id.to_owned());
        node_layer_label.push(layer);
        if !seen_layers.iter().any(|l| l == layer) {
            seen_layers.push(layer.to_owned());
        }
    }
    if node_labels.is_empty() {
        return Err(format_error(np, 0, "no nodes declared"));
    }
    let layers = layer_order(&seen_layers);
    let layer_index: HashMap<&str, usize> = layers.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let node_layer: Vec<usize> = node_layer_label.iter().map(|l| layer_index[l]).collect();

    let node = |path: &Path, line: usize, id: &str| -> Result<usize> {
        node_index.get(id).copied().ok_or_else(|| format_error(path, line, format!("unknown node `{id}`")))
    };

    let mut intra_edges = Vec::new();
    if let Some((p, text)) = intra {
        for (line, f) in records(text) {
            let [layer, u, v] = fields::<3>(p, line, &f, "layer node_u node_v")?;
            let k = *layer_index.get(layer).ok_or_else(|| format_error(p, line, format!("unknown layer `{layer}`")))?;
            let (a, b) = (node(p, line, u)?, node(p, line, v)?);
            if a == b {
                return Err(format_error(p, line, format!("self-loop on `{u}`")));
            }
            for (id, n) in [(u, a), (v, b)] {
                if node_layer[n] != k {
                    return Err(format_error(p, line, format!("node `{id}` is not in layer `{layer}`")));
                }
            }
            intra_edges.push(Pair::new(a, b));
        }
    }
    let mut inter_edges = Vec::new();
    if let Some((p, text)) = inter {
        for (line, f) in records(text) {
            let [u, v] = fields::<2>(p, line, &f, "node_u node_v")?;
            let (a, b) = (node(p, line, u)?, node(p, line, v)?);
            if node_layer[a] == node_layer[b] {
                return Err(format_error(p, line, format!("`{u}` and `{v}` share layer `{}`", layers[node_layer[a]])));
            }
            inter_edges.push(Pair::new(a, b));
        }
    }
    let graph = build_multiplex_with_layers(layers.len(), node_layer, &intra_edges, &inter_edges, policy)?;
    Ok(Dataset { graph, ids: IdMap { nodes: node_labels, layers } })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::io(path))
}

/// Reads a dataset from the three text files; edge files are optional.
pub fn read_text(nodes: &Path, intra: Option<&Path>, inter: Option<&Path>, policy: ClosurePolicy) -> Result<Dataset> {
    let n = read(nodes)?;
    let a = intra.map(read).transpose()?;
    let b = inter.map(read).transpose()?;
    parse_text(
        (nodes, &n),
        intra.zip(a.as_deref()),
        inter.zip(b.as_deref()),
        policy,
    )
}

/// Writes `nodes.txt`, `intra.txt` and `inter.txt` under `dir`.
pub fn write_text(dir: &Path, data: &Dataset) -> Result<[PathBuf; 3]> {
    let g = &data.graph;
    let ids = &data.ids;
    let mut nodes = String::from("# node_id layer\n");
    for u in 0..g.node_count() {
        writeln!(nodes, "{} {}", ids.nodes[u], ids.layers[g.layer_of(u)]).unwrap();
    }
    let mut intra = String::from("# layer node_u node_v\n");
    for p in g.intra_edges() {
        writeln!(intra, "{} {} {}", ids.layers[g.layer_of(p.0)], ids.nodes[p.0], ids.nodes[p.1]).unwrap();
    }
    let mut inter = String::from("# node_u node_v\n");
    for p in g.inter_edges() {
        writeln!(inter, "{} {}", ids.nodes[p.0], ids.nodes[p.1]).unwrap();
    }
    let paths = [dir.join("nodes.txt"), dir.join("intra.txt"), dir.join("inter.txt")];
    for (p, text) in paths.iter().zip([nodes, intra, inter]) {
        fs::write(p, text).map_err(Error::io(p))?;
    }
    Ok(paths)
}

/// Size summary. Average degree is given both as edges per node and as
/// `2 · edges` per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub layers: usize,
    pub layer_sizes: Vec<usize>,
    pub intra_edges: usize,
    pub inter_edges: usize,
    pub edges: usize,
    pub avg_degree_edges_per_node: f64,
    pub avg_degree_endpoints_per_node: f64,
}

impl GraphStats {
    pub fn of(g: &MultiplexGraph) -> Self {
        let n = g.node_count() as f64;
        let e = g.edge_count();
        GraphStats {
            nodes: g.node_count(),
            layers: g.layer_count(),
            layer_sizes: g.layer_sizes(),
            intra_edges: g.intra_edge_count(),
            inter_edges: g.inter_edge_count(),
            edges: e,
            avg_degree_edges_per_node: e as f64 / n,
            avg_degree_endpoints_per_node: 2.0 * e as f64 / n,
        }
    }
}
