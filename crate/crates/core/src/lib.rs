//! Two-phase graph attention embedding for multiplex networks.
//!
//! A multiplex graph spreads its nodes over `L` disjoint layers. Edges inside a
//! layer are *intra-layer* links (the horizontal network); edges joining nodes
//! of different layers are *inter-layer* links (the vertical network), whose
//! components are cliques or isolated nodes.
//!
//! The model embeds every node twice. The horizontal sub-model runs stacked
//! attention layers independently on each layer's intra-layer graph. The
//! vertical sub-model runs attention over the vertical network and fuses, per
//! node, a gated linear projection of the node's final horizontal embedding
//! with the aggregated vertical messages through a learned scalar `β`.
//!
//! The crate is `no_std` (it needs `alloc`). It carries:
//!
//! - [`graph`]: the multiplex data model, validation, largest connected
//!   component, marked-node train/test splits and a synthetic generator.
//! - [`autodiff`]: a recording tape with exact reverse-mode adjoints for the
//!   operator suite the layers use, plus a central-difference gradient checker.
//! - [`model`]: horizontal, vertical and plain attention layers and the
//!   two-phase forward pass.
//! - [`train`]: link-prediction loss, per-epoch negative resampling, the
//!   adaptive-moment training loop and grid search.
//! - [`eval`]: rank AUC, Welch's t-test, repetition aggregation and the two
//!   ablation pipelines.
//!
//! File formats, parallel repetition and the command line live in the `mpxgat`
//! companion crate.

#![no_std]

extern crate alloc;

pub mod autodiff;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, ErrorKind, Result};
