use super::dense::Tensor;
use super::tape::{Gradients, Tape, Var};
use crate::error::{Error, Result};

/// Ordered collection of named trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter; names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::input(format!("duplicate parameter `{name}`")));
        }
        self.names.push(name);
        self.tensors.push(tensor.with_requires_grad(true));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.position(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.position(name).map(move |i| &mut self.tensors[i])
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.tensors.iter_mut()
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Records every parameter on `tape` as a trainable leaf.
    pub fn bind<'t>(&self, tape: &'t Tape) -> Bound<'t> {
        Bound {
            names: self.names.clone(),
            vars: self.tensors.iter().map(|t| tape.param(t.clone())).collect(),
        }
    }

    /// Records every parameter as a constant (inference only).
    pub fn bind_frozen<'t>(&self, tape: &'t Tape) -> Bound<'t> {
        Bound {
            names: self.names.clone(),
            vars: self
                .tensors
                .iter()
                .map(|t| tape.constant(t.clone()))
                .collect(),
        }
    }

    /// Adds the gradients recorded for `bound` into each tensor's buffer.
    pub fn accumulate(&mut self, bound: &Bound<'_>, grads: &Gradients) -> Result<()> {
        if bound.vars.len() != self.tensors.len() {
            return Err(Error::input("bound parameters do not match this set"));
        }
        for (tensor, var) in self.tensors.iter_mut().zip(&bound.vars) {
            match grads.get(*var) {
                Some(g) => tensor.accumulate_grad(g)?,
                None => tensor.accumulate_grad(&vec![0.0; tensor.len()])?,
            }
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }
}

/// Parameters of a [`ParamSet`] recorded on one tape.
pub struct Bound<'t> {
    names: Vec<String>,
    vars: Vec<Var<'t>>,
}

impl<'t> Bound<'t> {
    /// Names already-recorded vars, e.g. the inputs of a gradient check.
    pub fn from_vars(names: Vec<String>, vars: Vec<Var<'t>>) -> Result<Self> {
        if names.len() != vars.len() {
            return Err(Error::input("one name per var is required"));
        }
        Ok(Bound { names, vars })
    }

    pub fn get(&self, name: &str) -> Result<Var<'t>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vars[i])
            .ok_or_else(|| Error::input(format!("missing parameter `{name}`")))
    }

    pub fn vars(&self) -> &[Var<'t>] {
        &self.vars
    }
}
