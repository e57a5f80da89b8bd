use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_data::Dataset;
use crate::tensor::AdamConfig;

/// Identifier of the random generator behind every seeded draw.
pub const RNG_NAME: &str = "chacha8";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "factorgcn")]
    FactorGcn,
    #[serde(rename = "mlp")]
    Mlp,
    #[serde(rename = "gcn")]
    Gcn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::FactorGcn => "factorgcn",
            ModelKind::Mlp => "mlp",
            ModelKind::Gcn => "gcn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "factorgcn" => Ok(ModelKind::FactorGcn),
            "mlp" => Ok(ModelKind::Mlp),
            "gcn" => Ok(ModelKind::Gcn),
            _ => Err(Error::Usage(format!(
                "unknown model `{s}` (expected factorgcn, mlp or gcn)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Independent 0/1 labels; sigmoid outputs, binary cross-entropy.
    MultiLabel,
    /// One class per graph; logits, cross-entropy.
    MultiClass,
    /// Real-valued targets; mean absolute error.
    Regression,
}

/// Hidden width used for a model with `n_factors` factor graphs per layer.
pub fn default_hidden(n_factors: usize) -> usize {
    if n_factors <= 4 {
        32
    } else {
        64
    }
}

/// Architecture and training settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub task: TaskKind,
    pub input_dim: usize,
    pub n_labels: usize,
    /// Factor graphs per disentangle layer; its length is the model depth for
    /// the baselines too.
    pub factors_per_layer: Vec<usize>,
    /// Merged width of every hidden layer; each factor gets
    /// `hidden / factors` of it.
    pub hidden: usize,
    /// Weight of the discriminator loss.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub rng: String,
    pub optimizer: AdamConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model: ModelKind::FactorGcn,
            task: TaskKind::MultiLabel,
            input_dim: crate::graph_data::MAX_NODES,
            n_labels: 4,
            factors_per_layer: vec![4, 4],
            hidden: default_hidden(4),
            lambda: 0.5,
            epochs: 80,
            seed: 0,
            rng: RNG_NAME.to_string(),
            optimizer: AdamConfig::default(),
        }
    }
}

impl ModelConfig {
    /// Synthetic-benchmark defaults for `dataset`: two layers with as many
    /// factor graphs as the dataset has factor types.
    pub fn for_dataset(dataset: &Dataset, model: ModelKind) -> Self {
        let n = dataset.n_factors;
        ModelConfig {
            model,
            input_dim: dataset.feature_dim,
            n_labels: n,
            factors_per_layer: vec![n, n],
            hidden: default_hidden(n),
            ..ModelConfig::default()
        }
    }

    /// Per-factor width of layer `l`.
    pub fn factor_dim(&self, layer: usize) -> usize {
        (self.hidden / self.factors_per_layer[layer]).max(1)
    }

    /// Width of the node features after layer `l`.
    pub fn layer_output_dim(&self, layer: usize) -> usize {
        match self.model {
            ModelKind::FactorGcn => self.factors_per_layer[layer] * self.factor_dim(layer),
            ModelKind::Mlp | ModelKind::Gcn => self.hidden,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.factors_per_layer.len()
    }

    /// Width of the final node features fed to the readout.
    pub fn feature_dim(&self) -> usize {
        self.layer_output_dim(self.num_layers() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::parse(field, msg));
        if self.factors_per_layer.is_empty() {
            return bad("factors_per_layer", "at least one layer is required".into());
        }
        if self.factors_per_layer.contains(&0) {
            return bad("factors_per_layer", "factor counts must be positive".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda", format!("must be a finite value >= 0, got {}", self.lambda));
        }
        if self.hidden == 0 {
            return bad("hidden", "must be positive".into());
        }
        if self.input_dim == 0 {
            return bad("input_dim", "must be positive".into());
        }
        if self.n_labels == 0 {
            return bad("n_labels", "must be positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs", "must be positive".into());
        }
        if self.rng != RNG_NAME {
            return bad("rng", format!("only `{RNG_NAME}` is supported, got `{}`", self.rng));
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0 && o.lr.is_finite()) {
            return bad("optimizer.lr", format!("must be positive, got {}", o.lr));
        }
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
            return bad("optimizer", "betas must lie in [0, 1)".into());
        }
        if !(o.weight_decay >= 0.0 && o.weight_decay.is_finite()) {
            return bad("optimizer.weight_decay", "must be a finite value >= 0".into());
        }
        Ok(())
    }

    /// Fails when the model cannot consume `dataset`.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if self.input_dim != dataset.feature_dim {
            return Err(Error::parse(
                "input_dim",
                format!(
                    "model expects {} node features, dataset has {}",
                    self.input_dim, dataset.feature_dim
                ),
            ));
        }
        if self.task == TaskKind::MultiLabel && self.n_labels != dataset.n_factors {
            return Err(Error::parse(
                "n_labels",
                format!(
                    "model predicts {} labels, dataset has {}",
                    self.n_labels, dataset.n_factors
                ),
            ));
        }
        if self.task != TaskKind::MultiLabel {
            return Err(Error::parse(
                "task",
                "synthetic datasets carry multi-label targets",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_follow_hidden_split() {
        let c = ModelConfig::default();
        assert_eq!(c.factor_dim(0), 8);
        assert_eq!(c.feature_dim(), 32);
        let c = ModelConfig {
            factors_per_layer: vec![4, 2],
            ..ModelConfig::default()
        };
        assert_eq!(c.layer_output_dim(1), 2 * 16);
        let c = ModelConfig {
            factors_per_layer: vec![6],
            hidden: 64,
            ..ModelConfig::default()
        };
        assert_eq!(c.feature_dim(), 60);
    }

    #[test]
    fn hidden_default_steps_at_four_factors() {
        assert_eq!(default_hidden(2), 32);
        assert_eq!(default_hidden(4), 32);
        assert_eq!(default_hidden(5), 64);
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            ModelConfig { lambda: -0.1, ..ModelConfig::default() },
            ModelConfig { factors_per_layer: vec![], ..ModelConfig::default() },
            ModelConfig { rng: "pcg".into(), ..ModelConfig::default() },
        ];
        let fields: Vec<String> = cases
            .iter()
            .map(|c| match c.validate() {
                Err(Error::Parse { field, .. }) => field,
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(fields, ["lambda", "factors_per_layer", "rng"]);
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn kinds_parse_and_print() {
        for k in [ModelKind::FactorGcn, ModelKind::Mlp, ModelKind::Gcn] {
            assert_eq!(k.to_string().parse::<ModelKind>().unwrap(), k);
        }
        assert!("gat".parse::<ModelKind>().is_err());
        let json = serde_json::to_string(&ModelConfig::default()).unwrap();
        assert!(json.contains("\"model\":\"factorgcn\""));
        assert!(json.contains("\"task\":\"multi_label\""));
    }
}
