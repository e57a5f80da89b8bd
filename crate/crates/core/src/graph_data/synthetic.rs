use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::catalog::{FactorGroundTruth, CATALOG, MAX_NODES};
use super::graph::Graph;
use super::{Dataset, Sample, Splits};
use crate::error::{Error, Result};

/// Samples generated when no count is given.
pub const DEFAULT_NUM_SAMPLES: usize = 1000;

/// Merges factors that share one node index set into a single graph: the
/// edge set is the union, node features are the adjacency rows.
pub fn merge_factors(chosen: &[FactorGroundTruth]) -> Result<Graph> {
    let first = chosen
        .first()
        .ok_or_else(|| Error::input("cannot merge an empty selection of factors"))?;
    let n = first.num_nodes;
    if let Some(bad) = chosen.iter().find(|f| f.num_nodes != n) {
        return Err(Error::input(format!(
            "factor {} has {} nodes, expected {n}",
            bad.kind, bad.num_nodes
        )));
    }
    let edges: Vec<_> = chosen.iter().flat_map(|f| f.edges.iter().copied()).collect();
    Graph::with_adjacency_features(n, &edges)
}

/// Number of factor types present in every sample of an `n_factors` dataset.
pub fn factors_per_sample(n_factors: usize) -> usize {
    n_factors.div_ceil(2)
}

/// Generates the multi-factor benchmark: every sample picks
/// `ceil(n_factors / 2)` distinct catalog graphs, pads them to 15 nodes and
/// merges them; its label marks the chosen types.
pub fn generate_synthetic(n_factors: usize, num_samples: usize, seed: u64) -> Result<Dataset> {
    if !(2..=CATALOG.len()).contains(&n_factors) {
        return Err(Error::input(format!(
            "factor count must be between 2 and {}, got {n_factors}",
            CATALOG.len()
        )));
    }
    if num_samples == 0 {
        return Err(Error::input("sample count must be positive"));
    }
    let padded: Vec<FactorGroundTruth> = CATALOG[..n_factors]
        .iter()
        .map(|k| k.build()?.pad_to(MAX_NODES))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = factors_per_sample(n_factors);
    let mut samples = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        let mut chosen = index::sample(&mut rng, n_factors, k).into_vec();
        chosen.sort_unstable();
        let factors: Vec<_> = chosen.iter().map(|&c| padded[c].clone()).collect();
        let graph = merge_factors(&factors)?;
        let mut label = vec![0u8; n_factors];
        for &c in &chosen {
            label[c] = 1;
        }
        samples.push(Sample {
            graph,
            label,
            factors,
        });
    }

    let mut order: Vec<usize> = (0..num_samples).collect();
    order.shuffle(&mut rng);
    let n_train = num_samples * 8 / 10;
    let n_val = num_samples / 10;
    let splits = Splits {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };

    Ok(Dataset {
        n_factors,
        feature_dim: MAX_NODES,
        seed,
        samples,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::graph_data::PredefinedGraph;

    fn padded(kind: PredefinedGraph) -> FactorGroundTruth {
        kind.build().unwrap().pad_to(MAX_NODES).unwrap()
    }

    #[test]
    fn single_factor_merge_is_that_factor() {
        let f = padded(PredefinedGraph::HouseX);
        let g = merge_factors(std::slice::from_ref(&f)).unwrap();
        assert_eq!(g.edges(), f.edges);
        assert_eq!(g.num_nodes(), 15);
    }

    #[test]
    fn disjoint_factors_add_edge_counts() {
        // star on 0..=3 and a path on 4..=6 share no edges
        let a = FactorGroundTruth {
            kind: PredefinedGraph::Star { leaves: 3 },
            num_nodes: 7,
            edges: vec![(0, 1), (0, 2), (0, 3)],
        };
        let b = FactorGroundTruth {
            kind: PredefinedGraph::HouseX,
            num_nodes: 7,
            edges: vec![(4, 5), (5, 6)],
        };
        assert_eq!(merge_factors(&[a, b]).unwrap().num_edges(), 5);
    }

    #[test]
    fn overlapping_factors_match_set_union() {
        let chosen = [
            padded(PredefinedGraph::Turan { nodes: 7, parts: 3 }),
            padded(PredefinedGraph::HouseX),
            padded(PredefinedGraph::Wheel { nodes: 8 }),
        ];
        let oracle: BTreeSet<(usize, usize)> =
            chosen.iter().flat_map(|f| f.edges.iter().copied()).collect();
        let g = merge_factors(&chosen).unwrap();
        assert_eq!(g.edges(), oracle.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn merge_rejects_empty_and_mismatched() {
        assert!(merge_factors(&[]).is_err());
        let a = PredefinedGraph::HouseX.build().unwrap();
        let b = padded(PredefinedGraph::HouseX);
        assert!(merge_factors(&[a, b]).is_err());
    }

    #[test]
    fn four_factor_labels_have_two_ones() {
        let d = generate_synthetic(4, 50, 1).unwrap();
        for s in &d.samples {
            assert_eq!(s.label.len(), 4);
            assert_eq!(s.label.iter().filter(|&&v| v == 1).count(), 2);
            assert_eq!(s.graph.num_nodes(), 15);
            assert_eq!(s.graph.feature_dim(), 15);
            s.validate(4).unwrap();
        }
        assert_eq!(factors_per_sample(5), 3);
    }

    #[test]
    fn label_marginals_match_k_over_n() {
        let n = 4;
        let d = generate_synthetic(n, 4000, 5).unwrap();
        let expected = factors_per_sample(n) as f64 / n as f64;
        for t in 0..n {
            let freq = d.samples.iter().filter(|s| s.label[t] == 1).count() as f64
                / d.samples.len() as f64;
            // five standard deviations of a binomial proportion
            let tol = 5.0 * (expected * (1.0 - expected) / d.samples.len() as f64).sqrt();
            assert!((freq - expected).abs() < tol, "type {t}: {freq}");
        }
    }

    #[test]
    fn splits_partition_samples() {
        let d = generate_synthetic(3, 1000, 2).unwrap();
        assert_eq!(
            (d.splits.train.len(), d.splits.val.len(), d.splits.test.len()),
            (800, 100, 100)
        );
        let mut all: Vec<_> = d
            .splits
            .train
            .iter()
            .chain(&d.splits.val)
            .chain(&d.splits.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            generate_synthetic(4, 30, 9).unwrap(),
            generate_synthetic(4, 30, 9).unwrap()
        );
        assert_ne!(
            generate_synthetic(4, 30, 9).unwrap(),
            generate_synthetic(4, 30, 10).unwrap()
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_synthetic(1, 10, 0).is_err());
        assert!(generate_synthetic(7, 10, 0).is_err());
        assert!(generate_synthetic(4, 0, 0).is_err());
    }
}
