//! One disentangle layer on a small graph, step by step.

use factorgcn::factor_layer::{
    aggregate, disentangle, merge, transform, Activation, DisentangleLayer, FactorCoefficients,
    GraphContext,
};
use factorgcn::graph_data::Graph;
use factorgcn::tensor::{ParamSet, Tape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> factorgcn::Result<()> {
    // a 4-cycle with one chord
    let graph = Graph::with_adjacency_features(4, &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)])?;
    let ctx = GraphContext::new(&graph);
    let layer = DisentangleLayer::new("layer0", 2, 4, 3);
    let mut params = ParamSet::new();
    layer.init_params(&mut params, &mut ChaCha8Rng::seed_from_u64(1))?;

    let tape = Tape::new();
    let bound = params.bind_frozen(&tape);
    let h = tape.constant(graph.features().clone());

    let h_prime = transform(h, bound.get(&layer.weight_name())?)?;
    println!("h' = {:?}", h_prime.value().data());

    let coef = disentangle(
        h_prime,
        &ctx,
        bound.get(&layer.score_weight_name())?,
        bound.get(&layer.score_bias_name())?,
    )?;
    let unpacked = FactorCoefficients::from_matrix(&ctx.arcs, &coef.value())?;
    for e in 0..layer.n_factors {
        println!("factor {e}:");
        for ((i, j), v) in unpacked.factor(e) {
            println!("  E[{i}->{j}] = {v:.4}");
        }
    }

    let per_factor = (0..layer.n_factors)
        .map(|e| aggregate(h_prime, coef.slice(1, e, 1)?, &ctx, Activation::Relu))
        .collect::<factorgcn::Result<Vec<_>>>()?;
    let merged = merge(&per_factor)?;
    println!("merged {:?}", merged.shape());
    for v in 0..graph.num_nodes() {
        println!("  node {v}: {:?}", merged.value().row(v));
    }

    let same = layer.forward(&bound, h, &ctx, Activation::Relu)?;
    assert_eq!(same.output.data(), merged.data());
    Ok(())
}
