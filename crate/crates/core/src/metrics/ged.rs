//! Edge-only graph edit distance between factor graphs and ground truths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::hungarian::{hungarian, CostMatrix};
use crate::error::{Error, Result};
use crate::factor_layer::FactorCoefficients;
use crate::graph_data::FactorGroundTruth;

/// Keeps the `k` undirected edges with the largest coefficients.
///
/// The two arcs of an edge are averaged first. Ties go to the
/// lexicographically smaller `(i, j)`.
pub fn binarize_to_count(
    coefficients: impl IntoIterator<Item = ((usize, usize), f64)>,
    k: usize,
) -> Result<Vec<(usize, usize)>> {
    let mut sums: BTreeMap<(usize, usize), (f64, u32)> = BTreeMap::new();
    for ((i, j), value) in coefficients {
        let slot = sums.entry((i.min(j), i.max(j))).or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
    }
    if k > sums.len() {
        return Err(Error::input(format!(
            "cannot keep {k} edges out of {}",
            sums.len()
        )));
    }
    let mut ranked: Vec<((usize, usize), f64)> = sums
        .into_iter()
        .map(|(edge, (sum, count))| (edge, sum / f64::from(count)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<_> = ranked.into_iter().take(k).map(|(e, _)| e).collect();
    kept.sort_unstable();
    Ok(kept)
}

/// Edge additions plus removals turning the binarized factor graph into the
/// ground truth; the factor is binarized to the ground truth's edge count.
pub fn gede_pair(
    coefficients: impl IntoIterator<Item = ((usize, usize), f64)>,
    ground_truth: &[(usize, usize)],
) -> Result<u64> {
    let kept: BTreeSet<_> = binarize_to_count(coefficients, ground_truth.len())?
        .into_iter()
        .collect();
    let truth: BTreeSet<_> = ground_truth
        .iter()
        .map(|&(i, j)| (i.min(j), i.max(j)))
        .collect();
    Ok(kept.symmetric_difference(&truth).count() as u64)
}

/// One ground-truth factor and the factor graph it was matched to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub kind: String,
    pub factor: usize,
    pub cost: u64,
}

/// Optimal matching of one sample's ground truths to its factor graphs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    pub total: u64,
}

/// Matches every ground-truth factor of a sample to a distinct factor graph
/// at minimum summed edge edit distance.
pub fn gede_sample(
    coefficients: &FactorCoefficients,
    ground_truth: &[FactorGroundTruth],
) -> Result<MatchResult> {
    if ground_truth.is_empty() {
        return Err(Error::input("sample has no ground-truth factors"));
    }
    let rows = coefficients.n_factors();
    let cols = ground_truth.len();
    if rows < cols {
        return Err(Error::input(format!(
            "{rows} factor graphs cannot cover {cols} ground-truth factors"
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for e in 0..rows {
        for gt in ground_truth {
            data.push(gede_pair(coefficients.factor(e), &gt.edges)? as i64);
        }
    }
    let cost = CostMatrix::new(rows, cols, data)?;
    let assignment = hungarian(&cost)?;
    let pairs: Vec<MatchedPair> = ground_truth
        .iter()
        .zip(&assignment.col_to_row)
        .enumerate()
        .map(|(c, (gt, row))| {
            let factor = row.expect("every column is assigned when rows >= cols");
            MatchedPair {
                kind: gt.kind.to_string(),
                factor,
                cost: cost.at(factor, c) as u64,
            }
        })
        .collect();
    Ok(MatchResult {
        total: assignment.total as u64,
        pairs,
    })
}

/// Mean over ground-truth kinds of how often each kind lands on its most
/// frequent factor graph.
pub fn c_score(matches: &[MatchResult], n_factors: usize) -> Result<f64> {
    if n_factors == 0 {
        return Err(Error::input("consistency over zero factor graphs"));
    }
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for pair in matches.iter().flat_map(|m| &m.pairs) {
        if pair.factor >= n_factors {
            return Err(Error::input(format!(
                "factor index {} out of range for {n_factors} factors",
                pair.factor
            )));
        }
        counts.entry(&pair.kind).or_insert_with(|| vec![0; n_factors])[pair.factor] += 1;
    }
    if counts.is_empty() {
        return Err(Error::input("consistency over zero matches"));
    }
    let total: f64 = counts
        .values()
        .map(|c| *c.iter().max().unwrap() as f64 / c.iter().sum::<u64>() as f64)
        .sum();
    Ok(total / counts.len() as f64)
}

/// Per-kind count of matches to each factor index.
pub fn match_histograms(
    matches: &[MatchResult],
    n_factors: usize,
) -> BTreeMap<String, Vec<u64>> {
    let mut out: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for pair in matches.iter().flat_map(|m| &m.pairs) {
        let slot = out
            .entry(pair.kind.clone())
            .or_insert_with(|| vec![0; n_factors]);
        if let Some(c) = slot.get_mut(pair.factor) {
            *c += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_data::PredefinedGraph;

    fn coef(pairs: &[((usize, usize), f64)]) -> Vec<((usize, usize), f64)> {
        pairs
            .iter()
            .flat_map(|&((i, j), v)| [((i, j), v), ((j, i), v)])
            .collect()
    }

    #[test]
    fn binarize_examples() {
        let c = coef(&[((0, 1), 0.9), ((1, 2), 0.8), ((2, 3), 0.1)]);
        assert!(binarize_to_count(c.clone(), 0).unwrap().is_empty());
        assert_eq!(binarize_to_count(c.clone(), 2).unwrap(), vec![(0, 1), (1, 2)]);
        assert!(binarize_to_count(c, 4).is_err());
    }

    #[test]
    fn binarize_averages_arc_pairs_and_breaks_ties_by_index() {
        // (0,1) averages to 0.5, (1,2) to 0.55
        let c = vec![((0, 1), 0.9), ((1, 0), 0.1), ((1, 2), 0.5), ((2, 1), 0.6)];
        assert_eq!(binarize_to_count(c, 1).unwrap(), vec![(1, 2)]);
        let tied = coef(&[((2, 3), 0.5), ((0, 1), 0.5), ((1, 2), 0.5)]);
        for _ in 0..3 {
            assert_eq!(binarize_to_count(tied.clone(), 2).unwrap(), vec![(0, 1), (1, 2)]);
        }
    }

    #[test]
    fn gede_pair_examples() {
        let truth = [(0, 1), (2, 3)];
        let c = coef(&[((0, 1), 0.9), ((1, 2), 0.8), ((2, 3), 0.1)]);
        // kept {(0,1),(1,2)} vs {(0,1),(2,3)}
        assert_eq!(gede_pair(c, &truth).unwrap(), 2);

        let exact = coef(&[((0, 1), 1.0), ((1, 2), 0.0), ((2, 3), 1.0)]);
        assert_eq!(gede_pair(exact, &truth).unwrap(), 0);

        let disjoint = coef(&[((0, 1), 0.0), ((1, 2), 1.0), ((2, 3), 0.0), ((0, 3), 1.0)]);
        assert_eq!(gede_pair(disjoint, &truth).unwrap(), 4);
    }

    fn sample_coefficients(values: Vec<Vec<f64>>) -> FactorCoefficients {
        FactorCoefficients {
            arcs: vec![(0, 1), (1, 0), (1, 2), (2, 1)],
            values,
        }
    }

    #[test]
    fn cheaper_factor_wins_for_single_ground_truth() {
        let gt = FactorGroundTruth {
            kind: PredefinedGraph::HouseX,
            num_nodes: 3,
            edges: vec![(1, 2)],
        };
        // factor 0 prefers (0,1): cost 2; factor 1 prefers (1,2): cost 0
        let c = sample_coefficients(vec![vec![0.9, 0.9, 0.1, 0.1], vec![0.2, 0.2, 0.7, 0.7]]);
        let m = gede_sample(&c, std::slice::from_ref(&gt)).unwrap();
        assert_eq!(m.pairs, vec![MatchedPair { kind: "house_x".into(), factor: 1, cost: 0 }]);
        assert_eq!(m.total, 0);

        let swapped = sample_coefficients(vec![c.values[1].clone(), c.values[0].clone()]);
        assert_eq!(gede_sample(&swapped, &[gt]).unwrap().pairs[0].factor, 0);
    }

    #[test]
    fn gede_sample_needs_enough_factors() {
        let gt = FactorGroundTruth {
            kind: PredefinedGraph::HouseX,
            num_nodes: 3,
            edges: vec![(1, 2)],
        };
        let c = sample_coefficients(vec![vec![0.5; 4]]);
        assert!(gede_sample(&c, &[gt.clone(), gt]).is_err());
        assert!(gede_sample(&c, &[]).is_err());
    }

    fn matched(kind: &str, factor: usize) -> MatchResult {
        MatchResult {
            pairs: vec![MatchedPair { kind: kind.into(), factor, cost: 0 }],
            total: 0,
        }
    }

    #[test]
    fn c_score_examples() {
        let constant: Vec<_> = (0..5).flat_map(|_| [matched("a", 2), matched("b", 0)]).collect();
        assert_eq!(c_score(&constant, 4).unwrap(), 1.0);

        let spread: Vec<_> = (0..4).map(|f| matched("a", f)).collect();
        assert_eq!(c_score(&spread, 4).unwrap(), 0.25);

        let mostly = vec![matched("a", 2), matched("a", 2), matched("a", 2), matched("a", 0)];
        assert_eq!(c_score(&mostly, 4).unwrap(), 0.75);

        // mean over kinds, not over samples
        let mixed = [mostly.clone(), vec![matched("b", 1); 2]].concat();
        assert_eq!(c_score(&mixed, 4).unwrap(), (0.75 + 1.0) / 2.0);

        assert!(c_score(&[], 4).is_err());
        assert!(c_score(&[matched("a", 5)], 4).is_err());
        assert_eq!(match_histograms(&mostly, 4)["a"], vec![1, 0, 3, 0]);
    }
}
