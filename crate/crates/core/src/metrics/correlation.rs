use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric matrix of absolute Pearson correlations between feature
/// dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub dim: usize,
    /// Row-major `dim × dim` values.
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim.max(1))
    }

    /// One line per dimension, six decimals, comma separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        let mut dim = None;
        for (line_no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: Vec<f64> = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|e| {
                        Error::parse(format!("line {}", line_no + 1), e.to_string())
                    })
                })
                .collect::<Result<_>>()?;
            if *dim.get_or_insert(row.len()) != row.len() {
                return Err(Error::parse(format!("line {}", line_no + 1), "ragged row"));
            }
            values.extend(row);
        }
        let dim = dim.unwrap_or(0);
        if values.len() != dim * dim {
            return Err(Error::parse("matrix", "correlation matrix is not square"));
        }
        Ok(CorrelationMatrix { dim, values })
    }

    /// Mean off-diagonal entry inside and across consecutive blocks of
    /// `block` dimensions, as `(within, across)`.
    pub fn block_means(&self, block: usize) -> Result<(f64, f64)> {
        if block == 0 || !self.dim.is_multiple_of(block) || self.dim / block < 2 || block < 2 {
            return Err(Error::input(format!(
                "cannot split {} dimensions into blocks of {block}",
                self.dim
            )));
        }
        let (mut within, mut nw, mut across, mut na) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i == j {
                    continue;
                }
                if i / block == j / block {
                    within += self.at(i, j);
                    nw += 1;
                } else {
                    across += self.at(i, j);
                    na += 1;
                }
            }
        }
        Ok((within / nw as f64, across / na as f64))
    }
}

/// Absolute Pearson correlation of every pair of dimensions over samples
/// (one row per sample). Dimensions without variance correlate with nothing
/// and keep a unit diagonal.
pub fn feature_correlation(features: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    if features.len() < 2 {
        return Err(Error::input("correlation needs at least two samples"));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::shape("feature rows differ in width"));
    }
    let n = features.len() as f64;
    let means: Vec<f64> = (0..dim)
        .map(|d| features.iter().map(|f| f[d]).sum::<f64>() / n)
        .collect();
    let centred: Vec<Vec<f64>> = (0..dim)
        .map(|d| features.iter().map(|f| f[d] - means[d]).collect())
        .collect();
    let norms: Vec<f64> = centred
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut values = vec![0.0; dim * dim];
    for i in 0..dim {
        values[i * dim + i] = 1.0;
        for j in i + 1..dim {
            let r = if norms[i] > 0.0 && norms[j] > 0.0 {
                let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).abs().min(1.0)
            } else {
                0.0
            };
            values[i * dim + j] = r;
            values[j * dim + i] = r;
        }
    }
    Ok(CorrelationMatrix { dim, values })
}
