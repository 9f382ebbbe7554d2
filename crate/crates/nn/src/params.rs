use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// Trainable parameters keyed by hierarchical path
/// (e.g. `act1/enc0/mha/w_q`), kept in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    params: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(NnError::DuplicateParam(name));
        }
        self.params.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.params.get(name).ok_or_else(|| NnError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.params.get_mut(name).ok_or_else(|| NnError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of trainable scalars.
    pub fn count_params(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    /// Registers every parameter as a gradient-carrying leaf of `g`.
    pub fn bind(&self, g: &mut Graph) -> BoundParams {
        let vars = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), g.param(v.clone())))
            .collect();
        BoundParams { vars }
    }
}

/// The graph handles of a [`ParamStore`] bound into one [`Graph`].
pub struct BoundParams {
    vars: IndexMap<String, Var>,
}

impl BoundParams {
    /// Associates names with vars that already live in a graph.
    pub fn from_vars(vars: impl IntoIterator<Item = (String, Var)>) -> Self {
        Self {
            vars: vars.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars.get(name).copied().ok_or_else(|| NnError::UnknownParam(name.to_string()))
    }

    /// Gradients after `backward`; parameters the loss never reached are
    /// absent.
    pub fn gradients(&self, g: &Graph) -> IndexMap<String, Vec<f64>> {
        self.vars
            .iter()
            .filter_map(|(k, &v)| g.grad(v).map(|gr| (k.clone(), gr.to_vec())))
            .collect()
    }
}
