//! JSON dataset files.
//!
//! ```text
//! {version, n_factors, feature_dim, seed, splits: {train, val, test},
//!  samples: [{n, edges: [[i, j], ...], label: [0/1, ...],
//!             factors: [{kind, edges}]}]}
//! ```
//!
//! Edges are written with `i < j`. Node features are not stored; they are
//! rebuilt from adjacency rows on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::catalog::{FactorGroundTruth, PredefinedGraph};
use super::graph::{canonical_edges, Graph};
use super::{Dataset, Sample, Splits};
use crate::error::{Error, Result};

pub const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    version: u32,
    n_factors: usize,
    feature_dim: usize,
    seed: u64,
    splits: SplitsFile,
    samples: Vec<SampleFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitsFile {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleFile {
    n: usize,
    edges: Vec<[usize; 2]>,
    label: Vec<u8>,
    factors: Vec<FactorFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorFile {
    kind: String,
    edges: Vec<[usize; 2]>,
}

fn pairs(edges: &[(usize, usize)]) -> Vec<[usize; 2]> {
    edges.iter().map(|&(i, j)| [i, j]).collect()
}

fn tuples(edges: &[[usize; 2]]) -> Vec<(usize, usize)> {
    edges.iter().map(|&[i, j]| (i, j)).collect()
}

/// Serialises a dataset to its JSON document (one line, trailing newline).
pub fn to_json(d: &Dataset) -> String {
    let file = DatasetFile {
        version: DATASET_VERSION,
        n_factors: d.n_factors,
        feature_dim: d.feature_dim,
        seed: d.seed,
        splits: SplitsFile {
            train: d.splits.train.clone(),
            val: d.splits.val.clone(),
            test: d.splits.test.clone(),
        },
        samples: d
            .samples
            .iter()
            .map(|s| SampleFile {
                n: s.graph.num_nodes(),
                edges: pairs(&s.graph.edges()),
                label: s.label.clone(),
                factors: s
                    .factors
                    .iter()
                    .map(|f| FactorFile {
                        kind: f.kind.to_string(),
                        edges: pairs(&f.edges),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string(&file).expect("dataset serialises");
    out.push('\n');
    out
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(d)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

/// Field name from a serde message such as "missing field `n_factors`".
pub(crate) fn serde_field(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    msg.split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "document".to_string())
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let file: DatasetFile = serde_json::from_str(text)
        .map_err(|e| Error::parse(serde_field(&e), e.to_string()))?;
    if file.version != DATASET_VERSION {
        return Err(Error::parse(
            "version",
            format!("unsupported version {}", file.version),
        ));
    }
    let mut samples = Vec::with_capacity(file.samples.len());
    for (k, s) in file.samples.into_iter().enumerate() {
        let at = |field: &str| format!("samples[{k}].{field}");
        if s.n != file.feature_dim {
            return Err(Error::parse(
                at("n"),
                format!("{} nodes but feature_dim is {}", s.n, file.feature_dim),
            ));
        }
        let edges = tuples(&s.edges);
        if edges.iter().any(|&(i, j)| i >= j) {
            return Err(Error::parse(at("edges"), "edges must be written with i < j"));
        }
        let graph = Graph::with_adjacency_features(s.n, &edges)
            .map_err(|e| Error::parse(at("edges"), e.to_string()))?;
        let mut factors = Vec::with_capacity(s.factors.len());
        for (q, f) in s.factors.into_iter().enumerate() {
            let kind: PredefinedGraph = f
                .kind
                .parse()
                .map_err(|e: Error| Error::parse(at(&format!("factors[{q}].kind")), e.to_string()))?;
            let edges = canonical_edges(s.n, &tuples(&f.edges))
                .map_err(|e| Error::parse(at(&format!("factors[{q}].edges")), e.to_string()))?;
            factors.push(FactorGroundTruth {
                kind,
                num_nodes: s.n,
                edges,
            });
        }
        let sample = Sample {
            graph,
            label: s.label,
            factors,
        };
        sample.validate(file.n_factors).map_err(|e| match e {
            Error::Parse { field, message } => Error::parse(at(&field), message),
            other => other,
        })?;
        samples.push(sample);
    }
    let dataset = Dataset {
        n_factors: file.n_factors,
        feature_dim: file.feature_dim,
        seed: file.seed,
        samples,
        splits: Splits {
            train: file.splits.train,
            val: file.splits.val,
            test: file.splits.test,
        },
    };
    dataset.validate_splits()?;
    Ok(dataset)
}
