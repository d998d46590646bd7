//! File formats, parallel runners and the `mpxgat` command line for
//! [`mpxgat_core`].
//!
//! - [`ingest`]: whitespace-separated edge lists with original-id maps.
//! - [`archive`]: the binary graph archive (`MPXGRAPH`).
//! - [`checkpoint`]: the parameter container (`MPXPARAM`) and its JSON sidecar.
//! - [`config`]: JSON run configs and their schema.
//! - [`report`]: aligned TSV tables and JSON report documents.
//! - [`manifest`]: per-run manifests and replay comparison.
//! - [`run`]: repetitions, ablations and grid cells on a thread pool.
//! - [`cli`]: the subcommands.

pub mod archive;
mod binary;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod report;
pub mod run;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
