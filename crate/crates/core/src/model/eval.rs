use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::Model;
use crate::error::Result;
use crate::factor_layer::FactorCoefficients;
use crate::graph_data::{Dataset, Split};
use crate::metrics::{
    c_score, feature_correlation, gede_sample, match_histograms, micro_f1, CorrelationMatrix,
    MatchResult, MeanStd, MetricsReport,
};

/// Task, disentanglement and correlation metrics of `model` on one split.
///
/// Disentanglement is measured on the first layer's factor graphs.
pub fn evaluate(model: &Model, dataset: &Dataset, split: Split) -> Result<MetricsReport> {
    model.config.check_dataset(dataset)?;
    let mut preds = Vec::new();
    let mut targets = Vec::new();
    let mut pooled = Vec::new();
    let mut coefficients = Vec::new();
    for sample in dataset.split_samples(split) {
        let p = model.predict(&sample.graph)?;
        preds.push(p.output);
        targets.push(sample.label_f64());
        pooled.push(p.pooled);
        if let Some(first) = p.coefficients.into_iter().next() {
            coefficients.push(first);
        }
    }
    let n_factor_graphs = model.config.factors_per_layer[0];
    let correlation = if pooled.len() >= 2 {
        Some(feature_correlation(&pooled)?)
    } else {
        None
    };
    build_report(
        model.config.model.to_string(),
        dataset,
        split,
        &preds,
        &targets,
        (!coefficients.is_empty()).then_some((coefficients, n_factor_graphs)),
        correlation,
    )
}

/// Mean-pooled final node features of every sample in `split`.
pub fn graph_features(model: &Model, dataset: &Dataset, split: Split) -> Result<Vec<Vec<f64>>> {
    dataset
        .split_samples(split)
        .map(|s| Ok(model.predict(&s.graph)?.pooled))
        .collect()
}

/// Absolute correlation of the final graph-level features over `split`.
pub fn correlate(model: &Model, dataset: &Dataset, split: Split) -> Result<CorrelationMatrix> {
    model.config.check_dataset(dataset)?;
    feature_correlation(&graph_features(model, dataset, split)?)
}

/// Untrained reference: every factor graph draws each arc coefficient
/// uniformly from (0, 1) and every label is a fair coin flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomBaseline {
    pub n_factor_graphs: usize,
    pub seed: u64,
}

impl Default for RandomBaseline {
    fn default() -> Self {
        RandomBaseline {
            n_factor_graphs: 4,
            seed: 0,
        }
    }
}

impl RandomBaseline {
    pub fn evaluate(&self, dataset: &Dataset, split: Split) -> Result<MetricsReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut preds = Vec::new();
        let mut targets = Vec::new();
        let mut coefficients = Vec::new();
        for sample in dataset.split_samples(split) {
            let arcs = sample.graph.arcs().to_vec();
            let values = (0..self.n_factor_graphs)
                .map(|_| arcs.iter().map(|_| rng.gen::<f64>()).collect())
                .collect();
            coefficients.push(FactorCoefficients { arcs, values });
            preds.push(
                (0..dataset.n_factors)
                    .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
                    .collect(),
            );
            targets.push(sample.label_f64());
        }
        build_report(
            "random".to_string(),
            dataset,
            split,
            &preds,
            &targets,
            Some((coefficients, self.n_factor_graphs)),
            None,
        )
    }
}

fn build_report(
    model: String,
    dataset: &Dataset,
    split: Split,
    preds: &[Vec<f64>],
    targets: &[Vec<f64>],
    factor_graphs: Option<(Vec<FactorCoefficients>, usize)>,
    correlation: Option<CorrelationMatrix>,
) -> Result<MetricsReport> {
    let mut matches: Vec<MatchResult> = Vec::new();
    let mut ged_e = None;
    let mut c = None;
    let mut histograms = Default::default();
    let mut n_factor_graphs = None;
    if let Some((coefficients, n)) = factor_graphs {
        for (coef, sample) in coefficients.iter().zip(dataset.split_samples(split)) {
            matches.push(gede_sample(coef, &sample.factors)?);
        }
        if !matches.is_empty() {
            let totals: Vec<f64> = matches.iter().map(|m| m.total as f64).collect();
            ged_e = Some(MeanStd::of(&totals)?);
            c = Some(c_score(&matches, n)?);
        }
        histograms = match_histograms(&matches, n);
        n_factor_graphs = Some(n);
    }
    Ok(MetricsReport {
        model,
        split: split.to_string(),
        num_samples: preds.len(),
        micro_f1: Some(micro_f1(preds, targets)?),
        mae: None,
        ged_e,
        c_score: c,
        n_factor_graphs,
        match_histograms: histograms,
        matches,
        correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_data::generate_synthetic;
    use crate::model::{ModelConfig, ModelKind};

    #[test]
    fn random_baseline_is_reproducible_and_in_range() {
        let d = generate_synthetic(4, 200, 1).unwrap();
        let r = RandomBaseline::default();
        let a = r.evaluate(&d, Split::Test).unwrap();
        assert_eq!(a, r.evaluate(&d, Split::Test).unwrap());
        let c = a.c_score.unwrap();
        assert!((0.25..=1.0).contains(&c));
        assert_eq!(a.matches.len(), 20);
        assert!(a.matches.iter().all(|m| m.pairs.len() == 2));
    }

    #[test]
    fn untrained_models_report_every_metric() {
        let d = generate_synthetic(4, 30, 2).unwrap();
        let m = Model::new(ModelConfig::for_dataset(&d, ModelKind::FactorGcn)).unwrap();
        let r = evaluate(&m, &d, Split::Test).unwrap();
        assert!(r.micro_f1.is_some() && r.ged_e.is_some() && r.c_score.is_some());
        assert_eq!(r.correlation.as_ref().unwrap().dim, 32);
        let back = MetricsReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);

        let g = Model::new(ModelConfig::for_dataset(&d, ModelKind::Gcn)).unwrap();
        let r = evaluate(&g, &d, Split::Test).unwrap();
        assert!(r.ged_e.is_none() && r.c_score.is_none());
    }
}
