//! Graphs, the predefined-graph catalog, the synthetic multi-factor
//! benchmark and its on-disk format.

mod catalog;
mod graph;
mod io;
mod synthetic;

pub use catalog::{FactorGroundTruth, PredefinedGraph, CATALOG, MAX_NODES};
pub use graph::{canonical_edges, Graph};
pub(crate) use io::serde_field;
pub use io::{load_dataset, parse_dataset, save_dataset, to_json, DATASET_VERSION};
pub use synthetic::{factors_per_sample, generate_synthetic, merge_factors, DEFAULT_NUM_SAMPLES};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// One labelled synthetic graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub graph: Graph,
    /// 0/1 per factor type.
    pub label: Vec<u8>,
    /// Ground-truth factors, one per label entry set to 1, in catalog order.
    pub factors: Vec<FactorGroundTruth>,
}

impl Sample {
    pub fn label_f64(&self) -> Vec<f64> {
        self.label.iter().map(|&v| f64::from(v)).collect()
    }

    /// Checks the label/factor invariants against an `n_factors` catalog
    /// prefix.
    pub fn validate(&self, n_factors: usize) -> Result<()> {
        if self.label.len() != n_factors {
            return Err(Error::parse(
                "label",
                format!("length {} but n_factors is {n_factors}", self.label.len()),
            ));
        }
        if self.label.iter().any(|&v| v > 1) {
            return Err(Error::parse("label", "entries must be 0 or 1"));
        }
        let ones: Vec<usize> = (0..n_factors).filter(|&t| self.label[t] == 1).collect();
        if ones.len() != self.factors.len() {
            return Err(Error::parse(
                "factors",
                format!("{} factors but {} labels set", self.factors.len(), ones.len()),
            ));
        }
        for (f, &t) in self.factors.iter().zip(&ones) {
            if f.kind != CATALOG[t] {
                return Err(Error::parse(
                    "factors",
                    format!("factor `{}` does not match label position {t}", f.kind),
                ));
            }
            if f.num_nodes != self.graph.num_nodes() {
                return Err(Error::parse("factors", "factor node count differs from graph"));
            }
        }
        let union: BTreeSet<(usize, usize)> = self
            .factors
            .iter()
            .flat_map(|f| f.edges.iter().copied())
            .collect();
        if union.into_iter().collect::<Vec<_>>() != self.graph.edges() {
            return Err(Error::parse(
                "edges",
                "graph edges differ from the union of its factors",
            ));
        }
        Ok(())
    }
}

/// Train / validation / test sample indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// Synthetic multi-factor dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n_factors: usize,
    pub feature_dim: usize,
    pub seed: u64,
    pub samples: Vec<Sample>,
    pub splits: Splits,
}

impl Dataset {
    pub fn split(&self, which: Split) -> &[usize] {
        match which {
            Split::Train => &self.splits.train,
            Split::Val => &self.splits.val,
            Split::Test => &self.splits.test,
        }
    }

    pub fn split_samples(&self, which: Split) -> impl Iterator<Item = &Sample> {
        self.split(which).iter().map(move |&i| &self.samples[i])
    }

    /// Checks that the splits are disjoint and cover every sample.
    pub fn validate_splits(&self) -> Result<()> {
        let mut seen = vec![false; self.samples.len()];
        for (name, idx) in [
            ("splits.train", &self.splits.train),
            ("splits.val", &self.splits.val),
            ("splits.test", &self.splits.test),
        ] {
            for &i in idx {
                if i >= seen.len() {
                    return Err(Error::parse(name, format!("index {i} out of range")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::parse(name, format!("index {i} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::parse(
                "splits",
                format!("sample {missing} belongs to no split"),
            ));
        }
        Ok(())
    }
}
