//! Well-known graphs used as ground-truth factors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::graph::canonical_edges;

/// Largest node count of a synthetic sample.
pub const MAX_NODES: usize = 15;

/// A named graph construction. Node labelling follows the usual textbook
/// conventions (the same ones networkx uses).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredefinedGraph {
    /// Complete `parts`-partite graph on `nodes` nodes with part sizes as
    /// equal as possible, larger parts first.
    Turan { nodes: usize, parts: usize },
    /// Square with both diagonals plus a roof node on the top side.
    HouseX,
    /// Rooted tree where every internal node has `branching` children and
    /// all leaves sit at `depth`.
    BalancedTree { branching: usize, depth: usize },
    /// Hub `0` joined to a rim cycle over nodes `1..nodes`.
    Wheel { nodes: usize },
    /// Two `rungs`-cycles joined by rungs between `i` and `i + rungs`.
    CircularLadder { rungs: usize },
    /// Centre `0` joined to `leaves` leaves.
    Star { leaves: usize },
}

/// The fixed factor catalog; datasets with `N` factor types use the first `N`.
pub const CATALOG: [PredefinedGraph; 6] = [
    PredefinedGraph::Turan { nodes: 7, parts: 3 },
    PredefinedGraph::HouseX,
    PredefinedGraph::BalancedTree {
        branching: 2,
        depth: 3,
    },
    PredefinedGraph::Wheel { nodes: 8 },
    PredefinedGraph::CircularLadder { rungs: 5 },
    PredefinedGraph::Star { leaves: 9 },
];

/// One ground-truth factor: a predefined graph placed on a shared node index
/// set of size `num_nodes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorGroundTruth {
    pub kind: PredefinedGraph,
    pub num_nodes: usize,
    /// Sorted `(i, j)` pairs with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl PredefinedGraph {
    pub fn num_nodes(self) -> usize {
        match self {
            PredefinedGraph::Turan { nodes, .. } => nodes,
            PredefinedGraph::HouseX => 5,
            PredefinedGraph::BalancedTree { branching, depth } => {
                (0..=depth).map(|d| branching.saturating_pow(d as u32)).sum()
            }
            PredefinedGraph::Wheel { nodes } => nodes,
            PredefinedGraph::CircularLadder { rungs } => 2 * rungs,
            PredefinedGraph::Star { leaves } => leaves + 1,
        }
    }

    fn raw_edges(self) -> Result<Vec<(usize, usize)>> {
        let mut edges = Vec::new();
        match self {
            PredefinedGraph::Turan { nodes, parts } => {
                if parts == 0 || parts > nodes {
                    return Err(Error::input(format!(
                        "Turán graph needs 1 <= parts <= nodes, got T({nodes},{parts})"
                    )));
                }
                let (base, extra) = (nodes / parts, nodes % parts);
                let mut part_of = Vec::with_capacity(nodes);
                for p in 0..parts {
                    let size = base + usize::from(p < extra);
                    part_of.extend(std::iter::repeat_n(p, size));
                }
                for i in 0..nodes {
                    for j in i + 1..nodes {
                        if part_of[i] != part_of[j] {
                            edges.push((i, j));
                        }
                    }
                }
            }
            PredefinedGraph::HouseX => {
                edges.extend([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]);
            }
            PredefinedGraph::BalancedTree { branching, .. } => {
                if branching == 0 {
                    return Err(Error::input("balanced tree needs branching >= 1"));
                }
                for child in 1..self.num_nodes() {
                    edges.push(((child - 1) / branching, child));
                }
            }
            PredefinedGraph::Wheel { nodes } => {
                if nodes < 4 {
                    return Err(Error::input("wheel needs at least 4 nodes"));
                }
                for rim in 1..nodes {
                    edges.push((0, rim));
                    let next = if rim + 1 == nodes { 1 } else { rim + 1 };
                    edges.push((rim, next));
                }
            }
            PredefinedGraph::CircularLadder { rungs } => {
                if rungs < 3 {
                    return Err(Error::input("circular ladder needs at least 3 rungs"));
                }
                for i in 0..rungs {
                    let next = (i + 1) % rungs;
                    edges.push((i, next));
                    edges.push((rungs + i, rungs + next));
                    edges.push((i, rungs + i));
                }
            }
            PredefinedGraph::Star { leaves } => {
                if leaves == 0 {
                    return Err(Error::input("star needs at least one leaf"));
                }
                edges.extend((1..=leaves).map(|l| (0, l)));
            }
        }
        Ok(edges)
    }

    /// Builds the graph on nodes `0..num_nodes()`.
    pub fn build(self) -> Result<FactorGroundTruth> {
        let n = self.num_nodes();
        if n > MAX_NODES {
            return Err(Error::input(format!(
                "{self} has {n} nodes, more than {MAX_NODES}"
            )));
        }
        let edges = canonical_edges(n, &self.raw_edges()?)?;
        Ok(FactorGroundTruth {
            kind: self,
            num_nodes: n,
            edges,
        })
    }
}

impl FactorGroundTruth {
    /// Adds isolated nodes until the graph has `n` nodes.
    pub fn pad_to(&self, n: usize) -> Result<Self> {
        if n < self.num_nodes {
            return Err(Error::input(format!(
                "cannot pad a {}-node graph down to {n} nodes",
                self.num_nodes
            )));
        }
        Ok(FactorGroundTruth {
            num_nodes: n,
            ..self.clone()
        })
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(i, j)| i == node || j == node)
            .count()
    }
}

impl fmt::Display for PredefinedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match *self {
            PredefinedGraph::Turan { nodes, parts } => format!("turan_{nodes}_{parts}"),
            PredefinedGraph::HouseX => "house_x".to_string(),
            PredefinedGraph::BalancedTree { branching, depth } => {
                format!("balanced_tree_{branching}_{depth}")
            }
            PredefinedGraph::Wheel { nodes } => format!("wheel_{nodes}"),
            PredefinedGraph::CircularLadder { rungs } => format!("circular_ladder_{rungs}"),
            PredefinedGraph::Star { leaves } => format!("star_{leaves}"),
        };
        f.pad(&name)
    }
}

impl FromStr for PredefinedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::input(format!("unknown graph kind `{s}`"));
        let nums = |rest: &str, count: usize| -> Result<Vec<usize>> {
            let parsed: Vec<usize> = rest
                .split('_')
                .map(|p| p.parse::<usize>().map_err(|_| unknown()))
                .collect::<Result<_>>()?;
            if parsed.len() == count {
                Ok(parsed)
            } else {
                Err(unknown())
            }
        };
        if s == "house_x" {
            return Ok(PredefinedGraph::HouseX);
        }
        let prefixes: [(&str, usize); 5] = [
            ("turan_", 2),
            ("balanced_tree_", 2),
            ("wheel_", 1),
            ("circular_ladder_", 1),
            ("star_", 1),
        ];
        for (prefix, count) in prefixes {
            if let Some(rest) = s.strip_prefix(prefix) {
                let v = nums(rest, count)?;
                return Ok(match prefix {
                    "turan_" => PredefinedGraph::Turan {
                        nodes: v[0],
                        parts: v[1],
                    },
                    "balanced_tree_" => PredefinedGraph::BalancedTree {
                        branching: v[0],
                        depth: v[1],
                    },
                    "wheel_" => PredefinedGraph::Wheel { nodes: v[0] },
                    "circular_ladder_" => PredefinedGraph::CircularLadder { rungs: v[0] },
                    _ => PredefinedGraph::Star { leaves: v[0] },
                });
            }
        }
        Err(unknown())
    }
}
