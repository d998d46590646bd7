use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Tensor;
use crate::{Error, Result};

/// Index of a tensor inside a [`ParameterSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named learnable tensors, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a tensor. Names must be unique.
    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::invalid("parameter", alloc::format!("duplicate name `{name}`")));
        }
        self.names.push(name);
        self.tensors.push(value);
        Ok(ParamId(self.tensors.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn by_name(&self, name: &str) -> Result<&Tensor> {
        self.id_of(name).map(|id| self.get(id)).ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names.iter().zip(&self.tensors).enumerate().map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    /// Replaces every tensor with the same-named tensor of `other`; shapes
    /// must match and no name may be missing.
    pub fn load_from(&mut self, other: &ParameterSet) -> Result<()> {
        for (name, slot) in self.names.iter().zip(self.tensors.iter_mut()) {
            let src = other.by_name(name)?;
            if src.shape() != slot.shape() {
                return Err(Error::ShapeMismatch { op: "load_parameters", left: slot.shape(), right: src.shape() });
            }
            slot.clone_from(src);
        }
        Ok(())
    }
}

/// Gradient slots aligned with a [`ParameterSet`]. Backward passes add into
/// the slots; [`ParamGrads::zero`] resets them.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    slots: Vec<Tensor>,
}

impl ParamGrads {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        ParamGrads { slots: params.tensors.iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect() }
    }

    pub fn zero(&mut self) {
        self.slots.iter_mut().for_each(|t| t.fill(0.0));
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.slots[id.0]
    }

    pub(crate) fn slot_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.slots[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.slots.iter().enumerate().map(|(i, t)| (ParamId(i), t))
    }

    pub fn is_finite(&self) -> bool {
        self.slots.iter().all(Tensor::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.slots.iter().flat_map(|t| t.as_slice()).fold(0.0, |m, v| f64::max(m, libm::fabs(*v)))
    }
}
