use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{default_hidden, ModelConfig};
use super::train::train;
use crate::error::Result;
use crate::graph_data::Dataset;

/// One swept hyper-parameter value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", content = "value", rename_all = "snake_case")]
pub enum Setting {
    Lambda(f64),
    /// Factor graphs in every layer.
    FactorCount(usize),
}

impl Setting {
    pub fn value(&self) -> f64 {
        match *self {
            Setting::Lambda(v) => v,
            Setting::FactorCount(n) => n as f64,
        }
    }

    /// `base` with this setting applied. Changing the factor count also
    /// resets the hidden width to its default for that count.
    pub fn apply(&self, base: &ModelConfig) -> ModelConfig {
        let mut c = base.clone();
        match *self {
            Setting::Lambda(v) => c.lambda = v,
            Setting::FactorCount(n) => {
                c.factors_per_layer = vec![n; base.num_layers()];
                c.hidden = default_hidden(n);
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: Setting,
    pub micro_f1: Option<f64>,
    pub ged_e: Option<f64>,
    pub c_score: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Set when training or evaluation failed for this setting.
    pub error: Option<String>,
}

/// Trains one model per setting from `base` (same seed everywhere) and
/// returns the rows sorted by setting value. Settings run on separate
/// threads; results do not depend on scheduling.
pub fn run_sweep(dataset: &Dataset, base: &ModelConfig, settings: &[Setting]) -> Vec<SweepRow> {
    let run = |s: &Setting| -> SweepRow {
        match train(dataset, s.apply(base)) {
            Ok((_, report)) => SweepRow {
                setting: *s,
                micro_f1: report.test.micro_f1,
                ged_e: report.test.ged_e.map(|g| g.mean),
                c_score: report.test.c_score,
                best_epoch: Some(report.best_epoch),
                error: None,
            },
            Err(e) => SweepRow {
                setting: *s,
                micro_f1: None,
                ged_e: None,
                c_score: None,
                best_epoch: None,
                error: Some(e.to_string()),
            },
        }
    };
    let mut rows: Vec<SweepRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = settings
            .iter()
            .map(|s| scope.spawn(move || run(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    rows.sort_by(|a, b| a.setting.value().total_cmp(&b.setting.value()));
    rows
}

/// Tab-separated table with a header line.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    let mut out = String::from("parameter\tvalue\tmicro_f1\tged_e\tc_score\tbest_epoch\tstatus\n");
    for r in rows {
        let name = match r.setting {
            Setting::Lambda(_) => "lambda",
            Setting::FactorCount(_) => "factors",
        };
        let _ = writeln!(
            out,
            "{name}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.setting.value(),
            cell(r.micro_f1),
            cell(r.ged_e),
            cell(r.c_score),
            r.best_epoch.map_or("-".to_string(), |e| e.to_string()),
            r.error.as_deref().unwrap_or("ok"),
        );
    }
    out
}

/// Writes `sweep.json` and `sweep.tsv` into `dir`.
pub fn write_sweep(dir: &std::path::Path, rows: &[SweepRow]) -> Result<()> {
    use crate::error::Error;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("sweep.json");
    let mut text = serde_json::to_string_pretty(rows).expect("rows serialise");
    text.push('\n');
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    let tsv = dir.join("sweep.tsv");
    std::fs::write(&tsv, sweep_table(rows)).map_err(|e| Error::io(&tsv, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_data::generate_synthetic;
    use crate::model::ModelKind;

    #[test]
    fn rows_are_sorted_and_failures_recorded() {
        let d = generate_synthetic(4, 20, 0).unwrap();
        let base = ModelConfig {
            epochs: 1,
            ..ModelConfig::for_dataset(&d, ModelKind::FactorGcn)
        };
        let rows = run_sweep(
            &d,
            &base,
            &[Setting::Lambda(1.0), Setting::Lambda(0.0), Setting::Lambda(-1.0), Setting::Lambda(0.5)],
        );
        let values: Vec<f64> = rows.iter().map(|r| r.setting.value()).collect();
        assert_eq!(values, vec![-1.0, 0.0, 0.5, 1.0]);
        assert!(rows[0].error.is_some());
        assert!(rows[1..].iter().all(|r| r.error.is_none() && r.micro_f1.is_some()));
        let table = sweep_table(&rows);
        assert_eq!(table.lines().count(), 5);
    }

    #[test]
    fn factor_count_setting_resets_width() {
        let base = ModelConfig::default();
        let c = Setting::FactorCount(6).apply(&base);
        assert_eq!(c.factors_per_layer, vec![6, 6]);
        assert_eq!(c.hidden, 64);
    }
}
