//! Binary graph archive.
//!
//! Layout (little-endian): magic `MPXGRAPH`, `u32` version, `u64` node count,
//! `u64` layer count, one `u64` layer per node, `u64` intra edge count and
//! `u64` pairs, the same for inter edges, then node labels and layer labels as
//! length-prefixed UTF-8 strings.

use std::fs;
use std::path::Path;

use mpxgat_core::graph::{build_multiplex_with_layers, ClosurePolicy, Pair};

use crate::binary::{Reader, Writer};
use crate::error::{Error, Result};
use crate::ingest::{Dataset, IdMap};

const MAGIC: &[u8; 8] = b"MPXGRAPH";
const VERSION: u32 = 1;

pub fn encode(data: &Dataset) -> Vec<u8> {
    let g = &data.graph;
    let mut w = Writer::new(MAGIC, VERSION);
    w.len(g.node_count());
    w.len(g.layer_count());
    for &l in g.node_layers() {
        w.len(l);
    }
    for edges in [g.intra_edges().collect::<Vec<_>>(), g.inter_edges().collect()] {
        w.len(edges.len());
        for p in edges {
            w.len(p.0);
            w.len(p.1);
        }
    }
    for s in data.ids.nodes.iter().chain(&data.ids.layers) {
        w.str(s);
    }
    w.0
}

fn decode_inner(buf: &[u8]) -> std::result::Result<Dataset, String> {
    let (mut r, version) = Reader::open(buf, MAGIC)?;
    if version != VERSION {
        return Err(format!("unsupported archive version {version}"));
    }
    let n = r.len(8)?;
    let layers = r.len(0)?;
    let node_layer = (0..n).map(|_| r.u64().map(|l| l as usize)).collect::<Result<Vec<_>, _>>()?;
    let mut edges = [Vec::new(), Vec::new()];
    for list in &mut edges {
        let m = r.len(16)?;
        for _ in 0..m {
            list.push(Pair(r.u64()? as usize, r.u64()? as usize));
        }
    }
    let nodes = (0..n).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
    let layer_labels = (0..layers).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
    r.finish()?;
    let graph = build_multiplex_with_layers(layers, node_layer, &edges[0], &edges[1], ClosurePolicy::Strict)
        .map_err(|e| e.to_string())?;
    Ok(Dataset { graph, ids: IdMap { nodes, layers: layer_labels } })
}

pub fn decode(buf: &[u8], path: &Path) -> Result<Dataset> {
    decode_inner(buf).map_err(|message| Error::Archive { path: path.to_owned(), message })
}

pub fn write(path: &Path, data: &Dataset) -> Result<()> {
    fs::write(path, encode(data)).map_err(Error::io(path))
}

pub fn read(path: &Path) -> Result<Dataset> {
    let buf = fs::read(path).map_err(Error::io(path))?;
    decode(&buf, path)
}
