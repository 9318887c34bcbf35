use ndarray::Array2;
use rand::Rng;

use super::tape::{Tape, Var};
use crate::error::{shape_err, Error, Result};

/// Index of a parameter array inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Named, ordered collection of parameter arrays owned by one network family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    /// Uniform initialisation in `±1/sqrt(fan_in)`.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: (usize, usize),
        fan_in: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let value = Array2::from_shape_simple_fn(shape, || rng.gen_range(-bound..bound));
        self.add(name, value)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array2<f64>)> {
        self.names.iter().map(String::as_str).zip(self.values.iter())
    }

    pub fn values(&self) -> &[Array2<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.values
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    /// Replaces every array with the one of the same name in `other`.
    pub fn load_from(&mut self, other: &ParamStore) -> Result<()> {
        for (i, name) in self.names.iter().enumerate() {
            let id = other
                .find(name)
                .ok_or_else(|| Error::Parameter(format!("missing parameter `{name}`")))?;
            let src = other.get(id);
            if src.dim() != self.values[i].dim() {
                let (a, b) = (src.dim(), self.values[i].dim());
                return Err(shape_err("load_from", &[a.0, a.1], &[b.0, b.1]));
            }
            self.values[i].assign(src);
        }
        Ok(())
    }

    /// `self ← tau·live + (1−tau)·self` on every array.
    pub fn soft_update_from(&mut self, live: &ParamStore, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Parameter(format!("tau {tau} outside [0, 1]")));
        }
        if live.len() != self.len() {
            return Err(shape_err("soft_update", &[live.len()], &[self.len()]));
        }
        for (t, l) in self.values.iter_mut().zip(live.values.iter()) {
            if t.dim() != l.dim() {
                let (a, b) = (t.dim(), l.dim());
                return Err(shape_err("soft_update", &[a.0, a.1], &[b.0, b.1]));
            }
            ndarray::Zip::from(t).and(l).for_each(|t, &l| *t = tau * l + (1.0 - tau) * *t);
        }
        Ok(())
    }
}

/// Tape leaves bound to every array of a [`ParamStore`], indexed by [`ParamId`].
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl Tape {
    /// Registers every parameter as a leaf. Frozen bindings carry no gradient.
    pub fn bind(&mut self, store: &ParamStore, trainable: bool) -> Bound {
        let vars = store
            .values()
            .iter()
            .map(|v| self.leaf(v.clone(), trainable))
            .collect();
        Bound { vars }
    }

    /// Gradients for a binding, zero-filled for parameters the loss never reached.
    pub fn grads(&self, bound: &Bound) -> Vec<Array2<f64>> {
        bound
            .vars
            .iter()
            .map(|&v| {
                self.grad(v)
                    .cloned()
                    .unwrap_or_else(|| Array2::zeros(self.value(v).raw_dim()))
            })
            .collect()
    }
}

pub fn global_norm(grads: &[Array2<f64>]) -> f64 {
    grads
        .iter()
        .map(|g| g.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Array2<f64>], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let k = max_norm / norm;
        for g in grads.iter_mut() {
            g.mapv_inplace(|x| x * k);
        }
    }
    norm
}
