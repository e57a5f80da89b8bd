//! Checks the tape's gradients of a full FactorGCN loss against central
//! finite differences.

use factorgcn::factor_layer::GraphContext;
use factorgcn::graph_data::generate_synthetic;
use factorgcn::model::{total_loss, Model, ModelConfig, ModelKind, Target, TaskKind};
use factorgcn::tensor::gradcheck::check;
use factorgcn::tensor::{Bound, Tensor};

fn main() -> factorgcn::Result<()> {
    let data = generate_synthetic(4, 10, 0)?;
    let config = ModelConfig {
        factors_per_layer: vec![2, 2],
        hidden: 4,
        ..ModelConfig::for_dataset(&data, ModelKind::FactorGcn)
    };
    let model = Model::new(config)?;
    let names: Vec<String> = model.params.iter().map(|(n, _)| n.to_string()).collect();
    let values: Vec<Tensor> = model.params.iter().map(|(_, t)| t.clone()).collect();

    for sample in data.samples.iter().take(5) {
        let ctx = GraphContext::new(&sample.graph);
        let label = sample.label_f64();
        let result = check(
            &values,
            |_, vars| {
                let bound = Bound::from_vars(names.clone(), vars.to_vec())?;
                let fwd = model.forward(&bound, &sample.graph, &ctx)?;
                let ld = model.discriminator_loss(&bound, &fwd, &ctx)?;
                total_loss(TaskKind::MultiLabel, fwd.output, Target::Labels(&label), ld, 0.5)
            },
            1e-5,
        )?;
        println!(
            "{} edges: relative error {:.2e} over {} parameters",
            sample.graph.num_edges(),
            result.relative_error(),
            model.params.num_values()
        );
    }
    Ok(())
}
