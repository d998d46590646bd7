use alloc::vec::Vec;

use crate::{Error, Result};

/// Variable-length neighbor segments in compressed form: segment `i` covers
/// edges `offsets[i]..offsets[i + 1]`, and edge `e` reads from row
/// `sources[e]` of a `source_count`-row input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
    sources: Vec<usize>,
    targets: Vec<usize>,
    source_count: usize,
}

impl Segments {
    pub fn new(offsets: Vec<usize>, sources: Vec<usize>, source_count: usize) -> Result<Self> {
        let ok = offsets.first() == Some(&0)
            && offsets.windows(2).all(|w| w[0] <= w[1])
            && offsets.last() == Some(&sources.len())
            && sources.iter().all(|&s| s < source_count);
        if !ok {
            return Err(Error::invalid("segments", "offsets or sources are inconsistent"));
        }
        let mut targets = Vec::with_capacity(sources.len());
        for (i, w) in offsets.windows(2).enumerate() {
            targets.extend(core::iter::repeat_n(i, w[1] - w[0]));
        }
        Ok(Segments { offsets, sources, targets, source_count })
    }

    /// One segment per list; entries are source rows.
    pub fn from_lists(lists: &[Vec<usize>], source_count: usize) -> Result<Self> {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut sources = Vec::new();
        offsets.push(0);
        for l in lists {
            sources.extend_from_slice(l);
            offsets.push(sources.len());
        }
        Segments::new(offsets, sources, source_count)
    }

    pub fn segment_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.sources.len()
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn range(&self, segment: usize) -> core::ops::Range<usize> {
        self.offsets[segment]..self.offsets[segment + 1]
    }

    pub fn len_of(&self, segment: usize) -> usize {
        self.offsets[segment + 1] - self.offsets[segment]
    }

    /// Source row of every edge.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Segment of every edge.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}
