//! Parameter container and model checkpoints.
//!
//! Container layout (little-endian): magic `MPXPARAM`, `u32` version, `u64`
//! tensor count, then per tensor a `u64` name length, the UTF-8 name, a `u64`
//! rank, `u64` dims and the `f64` values in row-major order.
//!
//! A checkpoint is a container plus a JSON sidecar recording the model
//! configuration and seed needed to rebuild the architecture.

use std::fs;
use std::path::{Path, PathBuf};

use mpxgat_core::autodiff::{ParameterSet, Tensor};
use mpxgat_core::graph::FeatureMatrix;
use mpxgat_core::model::{ModelConfig, Mpxgat};
use serde::{Deserialize, Serialize};

use crate::binary::{Reader, Writer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MPXPARAM";
const VERSION: u32 = 1;

pub fn encode_params(params: &ParameterSet) -> Vec<u8> {
    let mut w = Writer::new(MAGIC, VERSION);
    w.len(params.len());
    for (_, name, t) in params.iter() {
        w.str(name);
        w.len(2);
        w.len(t.rows());
        w.len(t.cols());
        w.f64s(t.as_slice());
    }
    w.0
}

fn decode_inner(buf: &[u8]) -> std::result::Result<ParameterSet, String> {
    let (mut r, version) = Reader::open(buf, MAGIC)?;
    if version != VERSION {
        return Err(format!("unsupported container version {version}"));
    }
    let count = r.len(0)?;
    let mut out = ParameterSet::new();
    for _ in 0..count {
        let name = r.str()?;
        let rank = r.len(8)?;
        let dims = (0..rank).map(|_| r.len(0)).collect::<Result<Vec<_>, _>>()?;
        let (rows, cols) = match dims[..] {
            [] => (1, 1),
            [n] => (n, 1),
            [r, c] => (r, c),
            _ => return Err(format!("tensor `{name}` has rank {rank}; at most 2 is supported")),
        };
        let len = rows.checked_mul(cols).ok_or("dimension overflow")?;
        let data = r.f64s(len)?;
        let t = Tensor::from_vec(rows, cols, data).map_err(|e| e.to_string())?;
        out.push(name, t).map_err(|e| e.to_string())?;
    }
    r.finish()?;
    Ok(out)
}

pub fn decode_params(buf: &[u8], path: &Path) -> Result<ParameterSet> {
    decode_inner(buf).map_err(|message| Error::Archive { path: path.to_owned(), message })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    /// Seed the model was initialized from; fixes the random-horizontal vectors.
    pub seed: u64,
    pub node_count: usize,
    pub layer_count: usize,
    pub feature_dim: usize,
    pub version: String,
}

/// Sidecar path for a container path: `model.bin` → `model.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn save(path: &Path, model: &Mpxgat, seed: u64) -> Result<()> {
    fs::write(path, encode_params(model.params())).map_err(Error::io(path))?;
    let meta = CheckpointMeta {
        model: model.config().clone(),
        seed,
        node_count: model.node_count(),
        layer_count: model.layer_count(),
        feature_dim: model.feature_dim(),
        version: crate::VERSION.to_owned(),
    };
    let side = sidecar(path);
    let text = serde_json::to_string_pretty(&meta).map_err(Error::json(&side))? + "\n";
    fs::write(&side, text).map_err(Error::io(&side))
}

/// Rebuilds the model described by the sidecar and loads the stored values.
pub fn load(path: &Path, features: &FeatureMatrix) -> Result<Mpxgat> {
    let side = sidecar(path);
    let text = fs::read_to_string(&side).map_err(Error::io(&side))?;
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(Error::json(&side))?;
    let buf = fs::read(path).map_err(Error::io(path))?;
    let stored = decode_params(&buf, path)?;
    if features.rows() != meta.node_count || features.dim() != meta.feature_dim {
        return Err(Error::Archive {
            path: path.to_owned(),
            message: format!(
                "checkpoint expects {} nodes with {} features, graph has {} and {}",
                meta.node_count,
                meta.feature_dim,
                features.rows(),
                features.dim()
            ),
        });
    }
    let mut model = Mpxgat::new(meta.model, features, meta.layer_count, meta.seed)?;
    if stored.len() != model.params().len() {
        return Err(Error::Archive {
            path: path.to_owned(),
            message: format!("{} tensors stored, model has {}", stored.len(), model.params().len()),
        });
    }
    model.params_mut().load_from(&stored)?;
    Ok(model)
}
