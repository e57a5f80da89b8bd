use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, ModelKind, TaskKind};
use crate::discriminator::{discriminator_loss, readout, Discriminator};
use crate::error::{Error, Result};
use crate::factor_layer::{Activation, DisentangleLayer, FactorCoefficients, GraphContext, LayerOutput};
use crate::graph_data::Graph;
use crate::tensor::{Bound, ParamSet, Tape, Tensor, Var};

/// A model and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamSet,
}

/// Target of one graph.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Labels(&'a [f64]),
    Class(usize),
    Values(&'a [f64]),
}

/// Values recorded by one forward pass.
pub struct Forward<'t> {
    /// `[1, n_labels]`: probabilities, logits or values depending on the task.
    pub output: Var<'t>,
    /// `[1, D]` mean of the final node features.
    pub pooled: Var<'t>,
    /// Per disentangle layer; empty for the baselines.
    pub layers: Vec<LayerOutput<'t>>,
}

/// Detached outputs of one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub output: Vec<f64>,
    pub pooled: Vec<f64>,
    /// Coefficients of every disentangle layer.
    pub coefficients: Vec<FactorCoefficients>,
}

fn activation(layer: usize, num_layers: usize) -> Activation {
    if layer + 1 == num_layers {
        Activation::Identity
    } else {
        Activation::Relu
    }
}

impl Model {
    /// Fresh parameters drawn from the config's seed.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        let mut in_dim = config.input_dim;
        for l in 0..config.num_layers() {
            let out = config.layer_output_dim(l);
            match config.model {
                ModelKind::FactorGcn => {
                    disentangle_layer(&config, l, in_dim).init_params(&mut params, &mut rng)?
                }
                ModelKind::Mlp => {
                    params.insert(format!("mlp{l}.weight"), Tensor::glorot_uniform(out, in_dim, &mut rng))?;
                    params.insert(format!("mlp{l}.bias"), Tensor::zeros(&[1, out]))?;
                }
                ModelKind::Gcn => {
                    params.insert(format!("gcn{l}.weight"), Tensor::glorot_uniform(out, in_dim, &mut rng))?;
                }
            }
            in_dim = out;
        }
        if let Some(d) = discriminator_for(&config) {
            d.init_params(&mut params, &mut rng)?;
        }
        params.insert("head.weight", Tensor::glorot_uniform(in_dim, config.n_labels, &mut rng))?;
        params.insert("head.bias", Tensor::zeros(&[1, config.n_labels]))?;
        Ok(Model { config, params })
    }

    pub fn disentangle_layers(&self) -> Vec<DisentangleLayer> {
        if self.config.model != ModelKind::FactorGcn {
            return Vec::new();
        }
        let mut in_dim = self.config.input_dim;
        (0..self.config.num_layers())
            .map(|l| {
                let layer = disentangle_layer(&self.config, l, in_dim);
                in_dim = layer.output_dim();
                layer
            })
            .collect()
    }

    /// The discriminator on the first disentangle layer, if any.
    pub fn discriminator(&self) -> Option<Discriminator> {
        discriminator_for(&self.config)
    }

    pub fn forward<'t>(
        &self,
        bound: &Bound<'t>,
        graph: &Graph,
        ctx: &GraphContext,
    ) -> Result<Forward<'t>> {
        let tape = bound.get("head.weight")?.tape();
        if graph.feature_dim() != self.config.input_dim {
            return Err(Error::shape(format!(
                "graph has {} node features, model expects {}",
                graph.feature_dim(),
                self.config.input_dim
            )));
        }
        let mut h = tape.constant(graph.features().clone());
        let n_layers = self.config.num_layers();
        let mut layers = Vec::new();
        match self.config.model {
            ModelKind::FactorGcn => {
                for (l, layer) in self.disentangle_layers().iter().enumerate() {
                    let out = layer.forward(bound, h, ctx, activation(l, n_layers))?;
                    h = out.output;
                    layers.push(out);
                }
            }
            ModelKind::Mlp => {
                for l in 0..n_layers {
                    let w = bound.get(&format!("mlp{l}.weight"))?;
                    let b = bound.get(&format!("mlp{l}.bias"))?;
                    h = activation(l, n_layers).apply(h.matmul(w.transpose()?)?.add(b)?);
                }
            }
            ModelKind::Gcn => {
                for l in 0..n_layers {
                    let w = bound.get(&format!("gcn{l}.weight"))?;
                    let z = h.matmul(w.transpose()?)?.propagate(ctx.plan.clone(), None)?;
                    h = activation(l, n_layers).apply(z);
                }
            }
        }
        let pooled = readout(h)?;
        let logits = pooled
            .matmul(bound.get("head.weight")?)?
            .add(bound.get("head.bias")?)?;
        let output = match self.config.task {
            TaskKind::MultiLabel => logits.sigmoid(),
            TaskKind::MultiClass | TaskKind::Regression => logits,
        };
        Ok(Forward {
            output,
            pooled,
            layers,
        })
    }

    /// Discriminator loss over the first layer's factor graphs of one graph.
    pub fn discriminator_loss<'t>(
        &self,
        bound: &Bound<'t>,
        forward: &Forward<'t>,
        ctx: &GraphContext,
    ) -> Result<Option<Var<'t>>> {
        match (self.discriminator(), forward.layers.first()) {
            (Some(d), Some(first)) => {
                let probs = d.factor_probabilities(bound, first, ctx)?;
                Ok(Some(discriminator_loss(&[probs])?))
            }
            _ => Ok(None),
        }
    }

    /// Inference on one graph.
    pub fn predict(&self, graph: &Graph) -> Result<Prediction> {
        let ctx = GraphContext::new(graph);
        let tape = Tape::new();
        let bound = self.params.bind_frozen(&tape);
        let fwd = self.forward(&bound, graph, &ctx)?;
        let coefficients = fwd
            .layers
            .iter()
            .map(|l| FactorCoefficients::from_matrix(&ctx.arcs, &l.coefficients.value()))
            .collect::<Result<_>>()?;
        Ok(Prediction {
            output: fwd.output.data(),
            pooled: fwd.pooled.data(),
            coefficients,
        })
    }
}

fn disentangle_layer(config: &ModelConfig, l: usize, in_dim: usize) -> DisentangleLayer {
    DisentangleLayer::new(
        format!("layer{l}"),
        config.factors_per_layer[l],
        in_dim,
        config.factor_dim(l),
    )
}

fn discriminator_for(config: &ModelConfig) -> Option<Discriminator> {
    (config.model == ModelKind::FactorGcn)
        .then(|| Discriminator::new("disc", config.factors_per_layer[0], config.factor_dim(0)))
}

/// Task loss of one output against its target.
pub fn task_loss<'t>(task: TaskKind, output: Var<'t>, target: Target<'_>) -> Result<Var<'t>> {
    match (task, target) {
        (TaskKind::MultiLabel, Target::Labels(t)) => output.bce(t),
        (TaskKind::MultiClass, Target::Class(c)) => output.cross_entropy(&[c]),
        (TaskKind::Regression, Target::Values(t)) => output.l1(t),
        (task, target) => Err(Error::input(format!(
            "{task:?} task given a {target:?} target"
        ))),
    }
}

/// `L_t + λ · L_d`; without a discriminator term this is `L_t`.
pub fn total_loss<'t>(
    task: TaskKind,
    output: Var<'t>,
    target: Target<'_>,
    disc_loss: Option<Var<'t>>,
    lambda: f64,
) -> Result<Var<'t>> {
    let lt = task_loss(task, output, target)?;
    match disc_loss {
        Some(ld) => lt.add(ld.scale(lambda)),
        None => Ok(lt),
    }
}
