use std::collections::BTreeMap;
use std::ops::Index;

use rand::Rng;

use crate::checkpoint::{Checkpoint, CheckpointEntry};
use crate::error::{AutodiffError, Result};
use crate::nn::xavier_uniform;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }

    /// The id the `i`-th parameter added to a store receives.
    pub fn from_index(i: usize) -> Self {
        ParamId(i)
    }
}

/// Named trainable tensors plus their accumulated gradients.
///
/// Parameters keep insertion order, which fixes the order of gradient
/// reductions and of checkpoint entries.
#[derive(Debug, Clone, Default)]
pub struct ParamStore<F> {
    names: Vec<String>,
    values: Vec<Tensor<F>>,
    grads: Vec<Vec<F>>,
    index: BTreeMap<String, usize>,
}

/// Tape handles of a store's parameters for one forward pass.
#[derive(Debug, Clone)]
pub struct Bindings(Vec<Var>);

impl Bindings {
    /// Handles in parameter order, for driving a model from arbitrary tape leaves.
    pub fn new(vars: Vec<Var>) -> Self {
        Bindings(vars)
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

impl Index<ParamId> for Bindings {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

impl<F: Scalar> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore { names: Vec::new(), values: Vec::new(), grads: Vec::new(), index: BTreeMap::new() }
    }

    pub fn add(&mut self, name: &str, mut value: Tensor<F>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(AutodiffError::InvalidArgument { op: "param", msg: format!("duplicate parameter `{name}`") });
        }
        value.set_requires_grad(false);
        let id = self.values.len();
        self.grads.push(vec![F::zero(); value.len()]);
        self.values.push(value);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(ParamId(id))
    }

    pub fn add_xavier<R: Rng + ?Sized>(&mut self, name: &str, shape: Shape, rng: &mut R) -> Result<ParamId> {
        self.add(name, xavier_uniform(shape, rng))
    }

    pub fn add_zeros(&mut self, name: &str, shape: Shape) -> Result<ParamId> {
        self.add(name, Tensor::zeros(shape))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of scalar weights.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<F> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &[F] {
        &self.grads[id.0]
    }

    pub(crate) fn value_and_grad_mut(&mut self, i: usize) -> (&mut [F], &[F]) {
        (self.values[i].values_mut(), &self.grads[i])
    }

    /// Records every parameter on `tape` as a trainable leaf.
    pub fn bind(&self, tape: &mut Tape<F>) -> Bindings {
        Bindings(self.values.iter().map(|v| tape.param(v.clone())).collect())
    }

    /// Adds the tape gradients of `bindings` into the store's accumulators.
    pub fn accumulate_grads(&mut self, tape: &Tape<F>, bindings: &Bindings) {
        for (acc, &var) in self.grads.iter_mut().zip(&bindings.0) {
            if let Some(g) = tape.grad(var) {
                for (a, &x) in acc.iter_mut().zip(g) {
                    *a = *a + x;
                }
            }
        }
    }

    /// Adds a flat gradient vector laid out in parameter order.
    pub fn accumulate_flat(&mut self, flat: &[F]) {
        let mut offset = 0;
        for acc in &mut self.grads {
            let len = acc.len();
            for (a, &x) in acc.iter_mut().zip(&flat[offset..offset + len]) {
                *a = *a + x;
            }
            offset += len;
        }
    }

    pub fn scale_grads(&mut self, s: F) {
        for g in self.grads.iter_mut().flatten() {
            *g = *g * s;
        }
    }

    pub fn zero_grads(&mut self) {
        for g in self.grads.iter_mut().flatten() {
            *g = F::zero();
        }
    }

    pub fn cast<G: Scalar>(&self) -> ParamStore<G> {
        ParamStore {
            names: self.names.clone(),
            values: self.values.iter().map(Tensor::cast).collect(),
            grads: self.grads.iter().map(|g| vec![G::zero(); g.len()]).collect(),
            index: self.index.clone(),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            entries: self
                .names
                .iter()
                .zip(&self.values)
                .map(|(name, t)| CheckpointEntry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                    dtype: F::DTYPE,
                    values: t.values().iter().map(|v| v.to_f64_lossy()).collect(),
                })
                .collect(),
        }
    }

    /// Overwrites parameter values from `ckpt`. Names and shapes must match
    /// the store exactly.
    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        if ckpt.entries.len() != self.values.len() {
            return Err(AutodiffError::Checkpoint(format!(
                "checkpoint has {} tensors, model expects {}",
                ckpt.entries.len(),
                self.values.len()
            )));
        }
        for entry in &ckpt.entries {
            let id = self.id(&entry.name).ok_or_else(|| AutodiffError::UnknownParam(entry.name.clone()))?;
            let t = &mut self.values[id.0];
            if entry.shape != t.shape() {
                return Err(AutodiffError::Checkpoint(format!(
                    "`{}` has shape {:?}, model expects {:?}",
                    entry.name,
                    entry.shape,
                    t.shape()
                )));
            }
            for (dst, &v) in t.values_mut().iter_mut().zip(&entry.values) {
                *dst = F::of(v);
            }
        }
        Ok(())
    }
}
