//! The disentangle layer.
//!
//! 1. `h' = h · Wᵀ` with a shared transform `W` (`F' × F`).
//! 2. For every arc `(i, j)` and factor `e`:
//!    `E_ije = sigmoid(a_e · [h'_i ‖ h'_j] + b_e)`. Coefficients are not
//!    normalised over neighbours, and `E_ije` and `E_jie` are independent.
//! 3. Per factor: `out_i = σ(Σ_{j ∈ N(i)} E_ije / sqrt(|N(i)| |N(j)|) · h'_j)`.
//! 4. The `N_e` factor outputs are concatenated per node in factor order.

use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_data::Graph;
use crate::tensor::{Bound, MessagePlan, ParamSet, Tensor, Var};

/// Nonlinearity applied after aggregation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: Var<'_>) -> Var<'_> {
        match self {
            Activation::Relu => x.relu(),
            Activation::Identity => x,
        }
    }
}

/// Arc structure of one input graph, prepared for the layer kernels.
#[derive(Clone, Debug)]
pub struct GraphContext {
    pub plan: Rc<MessagePlan>,
    pub receivers: Rc<[usize]>,
    pub senders: Rc<[usize]>,
    pub arcs: Vec<(usize, usize)>,
}

impl GraphContext {
    pub fn new(graph: &Graph) -> Self {
        let plan = graph.message_plan();
        GraphContext {
            receivers: Rc::from(plan.receivers.clone()),
            senders: Rc::from(plan.senders.clone()),
            arcs: graph.arcs().to_vec(),
            plan,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.plan.num_nodes
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }
}

/// Coefficient values of every factor graph on the arcs of one input graph.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorCoefficients {
    pub arcs: Vec<(usize, usize)>,
    /// `values[e][a]` is the coefficient of arc `a` in factor graph `e`.
    pub values: Vec<Vec<f64>>,
}

impl FactorCoefficients {
    /// Unpacks an `[arcs, n_factors]` coefficient matrix.
    pub fn from_matrix(arcs: &[(usize, usize)], coef: &Tensor) -> Result<Self> {
        let (m, n_factors) = coef.dims2()?;
        if m != arcs.len() {
            return Err(Error::shape(format!(
                "{m} coefficient rows for {} arcs",
                arcs.len()
            )));
        }
        let values = (0..n_factors)
            .map(|e| (0..m).map(|a| coef.at(a, e)).collect())
            .collect();
        Ok(FactorCoefficients {
            arcs: arcs.to_vec(),
            values,
        })
    }

    pub fn n_factors(&self) -> usize {
        self.values.len()
    }

    /// Arc → coefficient map of factor `e`.
    pub fn factor(&self, e: usize) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.arcs.iter().copied().zip(self.values[e].iter().copied())
    }
}

/// `h' = h · Wᵀ`, one row per node.
pub fn transform<'t>(h: Var<'t>, weight: Var<'t>) -> Result<Var<'t>> {
    h.matmul(weight.transpose()?)
}

/// Scores every arc for every factor; returns the `[arcs, n_factors]`
/// coefficient matrix.
///
/// `score_weight` is `[n_factors, 2F']`: row `e` is `a_e`, whose first half
/// multiplies the receiving node `h'_i` and second half the sending node
/// `h'_j`. `score_bias` is `[1, n_factors]`.
pub fn disentangle<'t>(
    h_prime: Var<'t>,
    ctx: &GraphContext,
    score_weight: Var<'t>,
    score_bias: Var<'t>,
) -> Result<Var<'t>> {
    let dim = h_prime.shape()[1];
    let (n_factors, width) = match score_weight.shape()[..] {
        [e, w] => (e, w),
        _ => return Err(Error::shape("score weight must be a matrix")),
    };
    if width != 2 * dim {
        return Err(Error::shape(format!(
            "score weight width {width} for feature width {dim}"
        )));
    }
    if score_bias.shape() != [1, n_factors] {
        return Err(Error::shape(format!(
            "score bias shape {:?}, expected [1, {n_factors}]",
            score_bias.shape()
        )));
    }
    let a_recv = score_weight.slice(1, 0, dim)?;
    let a_send = score_weight.slice(1, dim, dim)?;
    let recv_scores = h_prime.matmul(a_recv.transpose()?)?;
    let send_scores = h_prime.matmul(a_send.transpose()?)?;
    let scores = recv_scores
        .gather_rows(ctx.receivers.clone())?
        .add(send_scores.gather_rows(ctx.senders.clone())?)?
        .add(score_bias)?;
    Ok(scores.sigmoid())
}

/// Aggregates `h'` over one factor graph whose per-arc coefficients are
/// `coef` (`[arcs, 1]`).
pub fn aggregate<'t>(
    h_prime: Var<'t>,
    coef: Var<'t>,
    ctx: &GraphContext,
    activation: Activation,
) -> Result<Var<'t>> {
    Ok(activation.apply(h_prime.propagate(ctx.plan.clone(), Some(coef))?))
}

/// Concatenates per-factor node features along the feature axis.
pub fn merge<'t>(per_factor: &[Var<'t>]) -> Result<Var<'t>> {
    let first = per_factor
        .first()
        .ok_or_else(|| Error::shape("merge of zero factor outputs"))?;
    first.tape().concat(per_factor, 1)
}

/// Hyper-parameters of one disentangle layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisentangleLayer {
    pub name: String,
    pub n_factors: usize,
    pub in_dim: usize,
    pub factor_dim: usize,
}

/// Everything one layer produces in a forward pass.
pub struct LayerOutput<'t> {
    /// Transformed features `h'`, shared by all factors and the discriminator.
    pub transformed: Var<'t>,
    /// `[arcs, n_factors]` coefficient matrix.
    pub coefficients: Var<'t>,
    /// Column `e` of `coefficients` as `[arcs, 1]`, one per factor.
    pub factor_coefficients: Vec<Var<'t>>,
    /// Merged node features, `n_factors · factor_dim` wide.
    pub output: Var<'t>,
}

impl DisentangleLayer {
    pub fn new(name: impl Into<String>, n_factors: usize, in_dim: usize, factor_dim: usize) -> Self {
        DisentangleLayer {
            name: name.into(),
            n_factors,
            in_dim,
            factor_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.n_factors * self.factor_dim
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn score_weight_name(&self) -> String {
        format!("{}.score_weight", self.name)
    }

    pub fn score_bias_name(&self) -> String {
        format!("{}.score_bias", self.name)
    }

    /// Glorot-uniform `W` and `a_e`, zero `b_e`.
    pub fn init_params<R: Rng + ?Sized>(&self, params: &mut ParamSet, rng: &mut R) -> Result<()> {
        if self.n_factors == 0 || self.factor_dim == 0 || self.in_dim == 0 {
            return Err(Error::input(format!("degenerate layer {self:?}")));
        }
        params.insert(
            self.weight_name(),
            Tensor::glorot_uniform(self.factor_dim, self.in_dim, rng),
        )?;
        params.insert(
            self.score_weight_name(),
            Tensor::glorot_uniform(self.n_factors, 2 * self.factor_dim, rng),
        )?;
        params.insert(self.score_bias_name(), Tensor::zeros(&[1, self.n_factors]))?;
        Ok(())
    }

    pub fn forward<'t>(
        &self,
        bound: &Bound<'t>,
        h: Var<'t>,
        ctx: &GraphContext,
        activation: Activation,
    ) -> Result<LayerOutput<'t>> {
        let in_dim = h.shape()[1];
        if in_dim != self.in_dim {
            return Err(Error::shape(format!(
                "layer {} expects {} input features, got {in_dim}",
                self.name, self.in_dim
            )));
        }
        let transformed = transform(h, bound.get(&self.weight_name())?)?;
        let coefficients = disentangle(
            transformed,
            ctx,
            bound.get(&self.score_weight_name())?,
            bound.get(&self.score_bias_name())?,
        )?;
        let mut factor_coefficients = Vec::with_capacity(self.n_factors);
        let mut outputs = Vec::with_capacity(self.n_factors);
        for e in 0..self.n_factors {
            let coef = coefficients.slice(1, e, 1)?;
            outputs.push(aggregate(transformed, coef, ctx, activation)?);
            factor_coefficients.push(coef);
        }
        Ok(LayerOutput {
            transformed,
            coefficients,
            factor_coefficients,
            output: merge(&outputs)?,
        })
    }
}
