//! Task and disentanglement metrics.
//!
//! Factor graphs are compared with ground-truth factors by edge-only edit
//! distance after binarizing each factor to the ground truth's edge count;
//! the optimal matching per sample gives GED_E, and how consistently each
//! ground-truth kind lands on the same factor index gives the C-Score.

mod correlation;
mod ged;
mod hungarian;
mod task;

pub use correlation::{feature_correlation, CorrelationMatrix};
pub use ged::{
    binarize_to_count, c_score, gede_pair, gede_sample, match_histograms, MatchResult,
    MatchedPair,
};
pub use hungarian::{hungarian, Assignment, CostMatrix};
pub use task::{mae, micro_f1, THRESHOLD};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("mean of zero values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(MeanStd {
            mean,
            std: var.sqrt(),
        })
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

/// Evaluation of one model on one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub split: String,
    pub num_samples: usize,
    pub micro_f1: Option<f64>,
    pub mae: Option<f64>,
    /// Per-sample summed matched edit distance.
    pub ged_e: Option<MeanStd>,
    pub c_score: Option<f64>,
    /// Number of factor graphs the matches index into.
    pub n_factor_graphs: Option<usize>,
    /// Ground-truth kind → matches per factor index.
    pub match_histograms: BTreeMap<String, Vec<u64>>,
    pub matches: Vec<MatchResult>,
    pub correlation: Option<CorrelationMatrix>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("report", e.to_string()))
    }

    /// Aligned console lines.
    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        let mut lines = vec![
            format!("model      {}", self.model),
            format!("split      {} ({} samples)", self.split, self.num_samples),
            format!("micro_f1   {}", opt(self.micro_f1)),
        ];
        if self.mae.is_some() {
            lines.push(format!("mae        {}", opt(self.mae)));
        }
        lines.push(format!(
            "ged_e      {}",
            self.ged_e.map_or("-".to_string(), |g| g.to_string())
        ));
        lines.push(format!("c_score    {}", opt(self.c_score)));
        for (kind, hist) in &self.match_histograms {
            lines.push(format!("  {kind:<20} {hist:?}"));
        }
        lines.join("\n")
    }
}
