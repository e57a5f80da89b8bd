use std::collections::BTreeSet;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::tensor::{MessagePlan, Tensor};

/// Undirected simple graph stored as a sorted, deduplicated arc list that
/// contains both `(i, j)` and `(j, i)` for every edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    features: Tensor,
    arcs: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

/// Normalises an undirected edge list to sorted `(i, j)` pairs with `i < j`.
pub fn canonical_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut set = BTreeSet::new();
    for &(a, b) in edges {
        if a >= num_nodes || b >= num_nodes {
            return Err(Error::input(format!(
                "edge ({a}, {b}) out of range for {num_nodes} nodes"
            )));
        }
        if a == b {
            return Err(Error::input(format!("self-loop on node {a}")));
        }
        set.insert((a.min(b), a.max(b)));
    }
    Ok(set.into_iter().collect())
}

impl Graph {
    /// Builds a graph from undirected edges and a `num_nodes × F` feature
    /// matrix.
    pub fn new(num_nodes: usize, edges: &[(usize, usize)], features: Tensor) -> Result<Self> {
        let (rows, _) = features.dims2()?;
        if rows != num_nodes {
            return Err(Error::shape(format!(
                "{rows} feature rows for {num_nodes} nodes"
            )));
        }
        let undirected = canonical_edges(num_nodes, edges)?;
        let mut degrees = vec![0; num_nodes];
        let mut arcs = Vec::with_capacity(2 * undirected.len());
        for &(i, j) in &undirected {
            degrees[i] += 1;
            degrees[j] += 1;
            arcs.push((i, j));
            arcs.push((j, i));
        }
        arcs.sort_unstable();
        Ok(Graph {
            num_nodes,
            features,
            arcs,
            degrees,
        })
    }

    /// Graph whose node features are the rows of its own adjacency matrix.
    pub fn with_adjacency_features(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let undirected = canonical_edges(num_nodes, edges)?;
        let mut adj = Tensor::zeros(&[num_nodes, num_nodes]);
        for &(i, j) in &undirected {
            adj.data_mut()[i * num_nodes + j] = 1.0;
            adj.data_mut()[j * num_nodes + i] = 1.0;
        }
        Self::new(num_nodes, &undirected, adj)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Undirected edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.arcs.iter().copied().filter(|&(i, j)| i < j).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.arcs.len() / 2
    }

    /// Message-passing pattern with the symmetric normalisation
    /// `1 / sqrt(deg(i) · deg(j))` on arc `(i, j)`; node `i` receives from `j`.
    pub fn message_plan(&self) -> Rc<MessagePlan> {
        let norm = self
            .arcs
            .iter()
            .map(|&(i, j)| 1.0 / ((self.degrees[i] * self.degrees[j]) as f64).sqrt())
            .collect();
        Rc::new(MessagePlan {
            num_nodes: self.num_nodes,
            receivers: self.arcs.iter().map(|a| a.0).collect(),
            senders: self.arcs.iter().map(|a| a.1).collect(),
            norm,
        })
    }

    /// Relabels node `v` as `perm[v]`, moving feature rows accordingly.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::input("not a permutation of the node set"));
        }
        let f = self.feature_dim();
        let mut data = vec![0.0; n * f];
        for v in 0..n {
            data[perm[v] * f..(perm[v] + 1) * f].copy_from_slice(self.features.row(v));
        }
        let edges: Vec<_> = self.edges().iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        Self::new(n, &edges, Tensor::matrix(n, f, data)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcs_are_closed_sorted_and_deduplicated() {
        let g = Graph::with_adjacency_features(4, &[(2, 1), (0, 1), (1, 2)]).unwrap();
        assert_eq!(g.arcs(), &[(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert_eq!(g.degrees(), &[1, 2, 1, 0]);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(Graph::with_adjacency_features(3, &[(1, 1)]).is_err());
        assert!(Graph::with_adjacency_features(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn adjacency_features_are_symmetric_rows() {
        let g = Graph::with_adjacency_features(3, &[(0, 2)]).unwrap();
        let x = g.features();
        for i in 0..3 {
            for j in 0..3 {
                let edge = g.edges().contains(&(i.min(j), i.max(j)));
                assert_eq!(x.at(i, j) == 1.0, edge);
                assert_eq!(x.at(i, j), x.at(j, i));
            }
        }
    }

    #[test]
    fn message_plan_uses_symmetric_normalisation() {
        let g = Graph::with_adjacency_features(3, &[(0, 1), (1, 2)]).unwrap();
        let plan = g.message_plan();
        let half = 1.0 / 2f64.sqrt();
        assert_eq!(plan.receivers, vec![0, 1, 1, 2]);
        assert_eq!(plan.senders, vec![1, 0, 2, 1]);
        assert_eq!(plan.norm, vec![half; 4]);
    }
}
