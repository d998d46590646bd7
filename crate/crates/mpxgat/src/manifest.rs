//! Run manifests: one per command invocation, enough to replay it.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    /// Working directory the arguments are relative to.
    pub cwd: String,
    /// Input files by role (`nodes`, `graph`, `config`, ...).
    pub inputs: BTreeMap<String, String>,
    pub config_path: Option<String>,
    /// Generator settings when the graph was synthesized.
    pub synthetic: Option<serde_json::Value>,
    pub seed: u64,
    pub out: String,
    /// Files written under `out`, manifest excluded.
    pub outputs: Vec<String>,
    pub version: String,
    pub timings: Timings,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let p = dir.join(FILE_NAME);
        let text = serde_json::to_string_pretty(self).map_err(Error::json(&p))? + "\n";
        fs::write(&p, text).map_err(Error::io(&p))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(Error::json(path))
    }
}

/// Files whose bytes differ (or exist on one side only) between two runs.
pub fn compare_outputs(recorded: &Path, replayed: &Path, files: &[String]) -> Result<Vec<String>> {
    let mut differ = Vec::new();
    for f in files {
        let a = fs::read(recorded.join(f)).map_err(Error::io(&recorded.join(f)))?;
        match fs::read(replayed.join(f)) {
            Ok(b) if a == b => {}
            _ => differ.push(f.clone()),
        }
    }
    Ok(differ)
}
