use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::graph::{Pair, PairClass};
use crate::model::Embeddings;
use crate::Result;

/// Node pairs of one class with 0/1 labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledPairs {
    pub pairs: Vec<Pair>,
    pub labels: Vec<f64>,
}

impl LabeledPairs {
    pub fn new(positives: &[Pair], negatives: &[Pair]) -> Self {
        let mut pairs = Vec::with_capacity(positives.len() + negatives.len());
        pairs.extend_from_slice(positives);
        pairs.extend_from_slice(negatives);
        let mut labels = alloc::vec![1.0; positives.len()];
        labels.resize(pairs.len(), 0.0);
        LabeledPairs { pairs, labels }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Logits `x_u · x_v` for each pair, on the embedding of `class`.
pub fn pair_logits(tape: &mut Tape, emb: &Embeddings, class: PairClass, pairs: &[Pair]) -> Result<Var> {
    let x = match class {
        PairClass::Intra => emb.horizontal,
        PairClass::Inter => emb.vertical,
    };
    let us: Arc<[usize]> = pairs.iter().map(|p| p.0).collect();
    let vs: Arc<[usize]> = pairs.iter().map(|p| p.1).collect();
    let a = tape.gather_rows(x, us)?;
    let b = tape.gather_rows(x, vs)?;
    tape.row_dot(a, b)
}

/// Binary cross-entropy of `σ(x_u · x_v)`: the mean over the intra batch
/// plus the mean over the inter batch. Empty batches contribute nothing;
/// `None` when both are empty.
pub fn link_loss(tape: &mut Tape, emb: &Embeddings, intra: &LabeledPairs, inter: &LabeledPairs) -> Result<Option<Var>> {
    let mut total: Option<Var> = None;
    for (class, batch) in [(PairClass::Intra, intra), (PairClass::Inter, inter)] {
        if batch.is_empty() {
            continue;
        }
        let logits = pair_logits(tape, emb, class, &batch.pairs)?;
        let term = tape.bce_with_logits(logits, batch.labels.clone())?;
        total = Some(match total {
            Some(t) => tape.add(t, term)?,
            None => term,
        });
    }
    Ok(total)
}
