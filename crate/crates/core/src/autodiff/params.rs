use std::collections::BTreeMap;

use super::{AutodiffError, Tensor};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub trainable: bool,
}

/// Named, ordered collection of model parameters.
///
/// Insertion order is the canonical order used by checkpoints and optimizers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
    by_name: BTreeMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor, trainable: bool) -> Result<ParamId, AutodiffError> {
        if self.by_name.contains_key(name) {
            return Err(AutodiffError::DuplicateParam(name.to_string()));
        }
        let id = ParamId(self.params.len());
        let grad = Tensor::zeros(value.shape());
        self.params.push(Parameter { name: name.to_string(), value, grad, trainable });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Adds `scale * grads` into the stored gradients.
    pub fn accumulate(&mut self, grads: &Gradients, scale: f64) {
        for (&id, g) in &grads.entries {
            let target = &mut self.params[id.0].grad;
            match g {
                Grad::Dense(t) => {
                    for (a, b) in target.data_mut().iter_mut().zip(t.data()) {
                        *a += scale * b;
                    }
                }
                Grad::Rows(rows) => {
                    for (&r, vals) in rows {
                        for (a, b) in target.row_mut(r).iter_mut().zip(vals) {
                            *a += scale * b;
                        }
                    }
                }
            }
        }
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

/// Gradient of one parameter. Row-sparse for lookup tables.
#[derive(Clone, Debug, PartialEq)]
pub enum Grad {
    Dense(Tensor),
    Rows(BTreeMap<usize, Vec<f64>>),
}

/// Parameter gradients produced by one backward sweep.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    entries: BTreeMap<ParamId, Grad>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add_dense(&mut self, id: ParamId, g: &Tensor) {
        match self.entries.get_mut(&id) {
            Some(Grad::Dense(t)) => t.add_assign(g),
            Some(Grad::Rows(_)) => unreachable!("parameter used both densely and by row lookup"),
            None => {
                self.entries.insert(id, Grad::Dense(g.clone()));
            }
        }
    }

    pub(crate) fn add_row(&mut self, id: ParamId, row: usize, g: &[f64]) {
        let entry = self.entries.entry(id).or_insert_with(|| Grad::Rows(BTreeMap::new()));
        match entry {
            Grad::Rows(rows) => {
                let slot = rows.entry(row).or_insert_with(|| vec![0.0; g.len()]);
                for (a, b) in slot.iter_mut().zip(g) {
                    *a += b;
                }
            }
            Grad::Dense(t) => {
                for (a, b) in t.row_mut(row).iter_mut().zip(g) {
                    *a += b;
                }
            }
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Grad> {
        self.entries.get(&id)
    }

    /// Dense gradient for `id`, zeros if the parameter was not reached.
    pub fn dense(&self, id: ParamId, shape: &[usize]) -> Tensor {
        let mut out = Tensor::zeros(shape);
        match self.entries.get(&id) {
            Some(Grad::Dense(t)) => out.add_assign(t),
            Some(Grad::Rows(rows)) => {
                for (&r, vals) in rows {
                    out.row_mut(r).copy_from_slice(vals);
                }
            }
            None => {}
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
