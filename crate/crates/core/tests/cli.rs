use std::path::{Path, PathBuf};

use factorgcn::cli::run_from;
use factorgcn::graph_data::{load_dataset, Split};
use factorgcn::metrics::{CorrelationMatrix, MetricsReport};
use factorgcn::model::{correlate, load_model, SweepRow};

fn run(args: &[&str]) -> i32 {
    run_from(std::iter::once("factorgcn").chain(args.iter().copied()))
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small dataset plus a briefly trained FactorGCN.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let data = path(dir, "data.json");
    let model = path(dir, "model.json");
    assert_eq!(run(&["generate", "--factors", "4", "--samples", "80", "--seed", "3", "--out", s(&data)]), 0);
    assert_eq!(run(&["train", "--data", s(&data), "--out", s(&model), "--epochs", "2"]), 0);
    (data, model)
}

#[test]
fn generate_validates_factor_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "d.json");
    assert_eq!(run(&["generate", "--factors", "9", "--out", s(&out)]), 2);
    assert_eq!(run(&["generate", "--factors", "1", "--out", s(&out)]), 2);
    assert_eq!(run(&["generate", "--factors", "4", "--samples", "0", "--out", s(&out)]), 2);
    assert!(!out.exists());
    assert_eq!(run(&["generate", "--factors", "4", "--samples", "50", "--out", s(&out)]), 0);
    let d = load_dataset(&out).unwrap();
    assert_eq!(d.n_factors, 4);
    assert!(d.samples.iter().all(|x| x.label.len() == 4));
}

#[test]
fn unknown_flags_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "missing.json");
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["train", "--data", s(&missing)]), 2);
    let out = path(dir.path(), "m.json");
    assert_eq!(run(&["train", "--data", s(&missing), "--out", s(&out)]), 1);
}

#[test]
fn train_writes_model_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = fixture(dir.path());
    let m = load_model(&model).unwrap();
    assert_eq!(m.config.epochs, 2);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(dir.path(), "model.report.json")).unwrap())
            .unwrap();
    assert!(report["best_epoch"].as_u64().unwrap() >= 1);
    assert!(report["test"]["micro_f1"].is_number());

    let before = std::fs::read(&data).unwrap();
    let gcn = path(dir.path(), "gcn.json");
    assert_eq!(
        run(&["train", "--data", s(&data), "--out", s(&gcn), "--model", "gcn", "--epochs", "1"]),
        0
    );
    assert_eq!(std::fs::read(&data).unwrap(), before, "input file changed");
    assert_eq!(
        run(&["train", "--data", s(&data), "--out", s(&gcn), "--model", "transformer"]),
        2
    );
    assert_eq!(
        run(&["train", "--data", s(&data), "--out", s(&gcn), "--lambda", "-1"]),
        2
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "data.json");
    assert_eq!(run(&["generate", "--factors", "3", "--samples", "40", "--out", s(&data)]), 0);
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"epochs": 1, "lambda": 0.25, "hidden": 12}"#).unwrap();
    let out = path(dir.path(), "m.json");
    assert_eq!(
        run(&["train", "--data", s(&data), "--out", s(&out), "--config", s(&cfg), "--lambda", "0.75"]),
        0
    );
    let m = load_model(&out).unwrap();
    assert_eq!((m.config.epochs, m.config.lambda, m.config.hidden), (1, 0.75, 12));

    std::fs::write(&cfg, r#"{"epochs": 1, "dropout": 0.5}"#).unwrap();
    assert_eq!(run(&["train", "--data", s(&data), "--out", s(&out), "--config", s(&cfg)]), 2);
}

#[test]
fn eval_reports_all_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = fixture(dir.path());
    let out = path(dir.path(), "eval.json");
    assert_eq!(run(&["eval", "--data", s(&data), "--model", s(&model), "--out", s(&out)]), 0);
    let r = MetricsReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.micro_f1.is_some() && r.ged_e.is_some() && r.c_score.is_some());
    assert!(!r.match_histograms.is_empty());

    assert_eq!(run(&["eval", "--data", s(&data), "--model", "random", "--out", s(&out)]), 0);
    let r = MetricsReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.model, "random");
    assert!(r.ged_e.unwrap().mean > 0.0);
}

#[test]
fn eval_rejects_incompatible_data() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model) = fixture(dir.path());
    let other = path(dir.path(), "three.json");
    assert_eq!(run(&["generate", "--factors", "3", "--samples", "30", "--out", s(&other)]), 0);
    let out = path(dir.path(), "eval.json");
    assert_eq!(run(&["eval", "--data", s(&other), "--model", s(&model), "--out", s(&out)]), 2);
    assert_eq!(run(&["correlate", "--data", s(&other), "--model", s(&model), "--out", s(&out)]), 2);
}

#[test]
fn correlate_writes_symmetric_reloadable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = fixture(dir.path());
    let out = path(dir.path(), "corr.csv");
    assert_eq!(run(&["correlate", "--data", s(&data), "--model", s(&model), "--out", s(&out)]), 0);
    let file = CorrelationMatrix::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let m = load_model(&model).unwrap();
    assert_eq!(file.dim, m.config.feature_dim());
    for i in 0..file.dim {
        for j in 0..file.dim {
            assert_eq!(file.at(i, j), file.at(j, i));
        }
    }
    let memory = correlate(&m, &load_dataset(&data).unwrap(), Split::Test).unwrap();
    for (a, b) in file.values.iter().zip(&memory.values) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn sweep_writes_sorted_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "data.json");
    assert_eq!(run(&["generate", "--factors", "4", "--samples", "40", "--out", s(&data)]), 0);
    let out = path(dir.path(), "sweep");
    assert_eq!(
        run(&["sweep", "--data", s(&data), "--lambdas", "1.0,0,0.5,0.2", "--epochs", "1", "--out", s(&out)]),
        0
    );
    let rows: Vec<SweepRow> =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r.setting.value()).collect();
    assert_eq!(values, vec![0.0, 0.2, 0.5, 1.0]);
    let tsv = std::fs::read_to_string(out.join("sweep.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);

    let failing = path(dir.path(), "failing");
    assert_eq!(
        run(&["sweep", "--data", s(&data), "--lambdas=-1,0.5", "--epochs", "1", "--out", s(&failing)]),
        1
    );
    let rows: Vec<SweepRow> =
        serde_json::from_str(&std::fs::read_to_string(failing.join("sweep.json")).unwrap()).unwrap();
    assert!(rows[0].error.is_some());
    assert!(rows[1].error.is_none() && rows[1].micro_f1.is_some());
}

#[test]
fn sweep_requires_one_setting_list() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "data.json");
    assert_eq!(run(&["generate", "--factors", "2", "--samples", "20", "--out", s(&data)]), 0);
    let out = path(dir.path(), "sweep");
    assert_eq!(run(&["sweep", "--data", s(&data), "--out", s(&out)]), 2);
    assert_eq!(
        run(&["sweep", "--data", s(&data), "--lambdas", "0", "--factor-counts", "2", "--out", s(&out)]),
        2
    );
}
