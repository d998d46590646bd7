use alloc::string::String;

use crate::graph::Pair;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data or configuration.
    Input,
    /// Divergence or a non-finite value during numeric work.
    Numerical,
    /// An internal consistency check failed.
    Invariant,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    // graph construction
    #[error("node {node} is out of range (graph has {node_count} nodes)")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("intra-layer edge ({}, {}) joins layers {layer_u} and {layer_v}", edge.0, edge.1)]
    IntraCrossesLayers { edge: Pair, layer_u: usize, layer_v: usize },
    #[error("inter-layer edge ({}, {}) lies inside layer {layer}", edge.0, edge.1)]
    InterWithinLayer { edge: Pair, layer: usize },
    #[error("node {node} has more than one counterpart on layer {layer}")]
    DuplicateCounterpart { node: usize, layer: usize },
    #[error("inter-layer closure violated: {0}-{1} and {1}-{2} are linked but {0}-{2} is not")]
    ClosureViolation(usize, usize, usize),
    #[error("graph is empty")]
    EmptyGraph,

    // splits and sampling
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("split produced no {class} test positives after {attempts} draw(s)")]
    EmptyTestSet { class: &'static str, attempts: u32 },
    #[error("exhaustive negatives need at most {limit} nodes, graph has {nodes}")]
    ExhaustiveTooLarge { nodes: usize, limit: usize },
    #[error("requested {requested} pairings but the smallest layer has {available} nodes")]
    InfeasibleCoverage { requested: usize, available: usize },

    // numerics
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: [usize; 2], right: [usize; 2] },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("empty segment {segment} in segment softmax")]
    EmptySegment { segment: usize },
    #[error("loss must be a 1x1 tensor, got {0:?}")]
    NonScalarLoss([usize; 2]),
    #[error("loss does not depend on any parameter")]
    DetachedGraph,
    #[error("variable {0} does not belong to this tape")]
    ForeignVariable(usize),
    #[error("forward pass is not deterministic")]
    NonDeterministic,
    #[error("empty {0} score list")]
    EmptyScores(&'static str),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("degenerate samples: {0}")]
    DegenerateSamples(&'static str),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("no usable results: {0}")]
    NoResults(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            ShapeMismatch { .. } | ForeignVariable(_) | DetachedGraph | NonScalarLoss(_) => {
                ErrorKind::Invariant
            }
            NonFinite(_) | Diverged { .. } | NonDeterministic => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
