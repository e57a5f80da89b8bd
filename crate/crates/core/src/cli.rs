//! The `factorgcn` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph_data::{generate_synthetic, load_dataset, save_dataset, Dataset, Split, CATALOG};
use crate::model::{
    default_hidden, evaluate, load_model, correlate, run_sweep, save_model, sweep_table,
    train_with_progress, write_sweep, ModelConfig, ModelKind, RandomBaseline, Setting,
};

#[derive(Debug, Parser)]
#[command(name = "factorgcn", version, about = "Factorizable graph convolution toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-factor dataset.
    Generate(GenerateArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Evaluate a model (or the random baseline) on the test split.
    Eval(EvalArgs),
    /// Export the feature-correlation matrix of a model as CSV.
    Correlate(CorrelateArgs),
    /// Train one model per λ or factor count and tabulate the results.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of factor types, taken from the start of the catalog.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=6))]
    pub factors: u8,
    #[arg(long, default_value_t = crate::graph_data::DEFAULT_NUM_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Model settings shared by `train` and `sweep`.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON file with any subset of the model config fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model file to write; the training report goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "factorgcn")]
    pub model: String,
    /// Comma-separated factor graph counts, one per layer.
    #[arg(long, value_delimiter = ',')]
    pub factors_per_layer: Option<Vec<usize>>,
    #[command(flatten)]
    pub settings: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model file, or `random` for the built-in baseline.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Factor graphs drawn by the random baseline.
    #[arg(long, default_value_t = 4)]
    pub random_factors: usize,
    /// Seed of the random baseline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("sweep").required(true).args(["lambdas", "factor_counts"])))]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub factor_counts: Option<Vec<usize>>,
    /// Directory receiving sweep.json and sweep.tsv.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: ModelArgs,
}

/// Parses the process arguments and runs the command.
pub fn run() -> ExitCode {
    ExitCode::from(run_from(std::env::args_os()) as u8)
}

/// Runs the command line given as `args` (program name first) and returns
/// the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 2,
        _ => 1,
    }
}

fn usage(e: Error) -> Error {
    match e {
        Error::Usage(_) => e,
        other => Error::Usage(other.to_string()),
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Correlate(a) => cmd_correlate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    if a.samples == 0 {
        return Err(Error::Usage("--samples must be positive".into()));
    }
    let n = usize::from(a.factors);
    let d = generate_synthetic(n, a.samples, a.seed)?;
    save_dataset(&d, &a.out)?;
    let kinds: Vec<String> = CATALOG[..n].iter().map(ToString::to_string).collect();
    println!("wrote {}", a.out.display());
    println!("samples    {}", d.samples.len());
    println!("factors    {}", kinds.join(", "));
    println!(
        "splits     train {} / val {} / test {}",
        d.splits.train.len(),
        d.splits.val.len(),
        d.splits.test.len()
    );
    Ok(())
}

/// Recursively overlays `patch` onto `base`.
fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults for `dataset`, then the config file, then command-line flags.
pub fn resolve_config(
    dataset: &Dataset,
    kind: ModelKind,
    factors_per_layer: Option<&[usize]>,
    s: &ModelArgs,
) -> Result<ModelConfig> {
    let mut config = ModelConfig::for_dataset(dataset, kind);
    let mut hidden_given = s.hidden.is_some();
    if let Some(path) = &s.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let patch: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
        if !patch.is_object() {
            return Err(Error::Usage(format!("config {} is not a JSON object", path.display())));
        }
        hidden_given |= patch.get("hidden").is_some();
        let mut merged = serde_json::to_value(&config).expect("config serialises");
        merge_json(&mut merged, patch);
        config = serde_json::from_value(merged)
            .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
    }
    if let Some(f) = factors_per_layer {
        config.factors_per_layer = f.to_vec();
        if !hidden_given {
            config.hidden = default_hidden(f.iter().copied().max().unwrap_or(1));
        }
    }
    if let Some(v) = s.lambda {
        config.lambda = v;
    }
    if let Some(v) = s.epochs {
        config.epochs = v;
    }
    if let Some(v) = s.seed {
        config.seed = v;
    }
    if let Some(v) = s.hidden {
        config.hidden = v;
    }
    if let Some(v) = s.lr {
        config.optimizer.lr = v;
    }
    if let Some(v) = s.weight_decay {
        config.optimizer.weight_decay = v;
    }
    config.validate().map_err(usage)?;
    config.check_dataset(dataset).map_err(usage)?;
    Ok(config)
}

/// `model.json` → `model.report.json`.
pub fn report_path(model_path: &Path) -> PathBuf {
    let stem = model_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    model_path.with_file_name(format!("{stem}.report.json"))
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let kind: ModelKind = a.model.parse()?;
    let dataset = load_dataset(&a.data)?;
    let config = resolve_config(&dataset, kind, a.factors_per_layer.as_deref(), &a.settings)?;
    let (model, report) = train_with_progress(&dataset, config, &mut |e| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  val_loss {:.4}  val_f1 {:.4}",
            e.epoch, e.train_loss, e.val_loss, e.val_micro_f1
        );
    })?;
    save_model(&model, &a.out)?;
    let rp = report_path(&a.out);
    std::fs::write(&rp, report.to_json()).map_err(|e| Error::io(&rp, e))?;
    println!("wrote {} and {}", a.out.display(), rp.display());
    println!("best epoch {}", report.best_epoch);
    println!("{}", report.test.summary());
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let dataset = load_dataset(&a.data)?;
    let report = if a.model == "random" {
        if a.random_factors == 0 {
            return Err(Error::Usage("--random-factors must be positive".into()));
        }
        RandomBaseline {
            n_factor_graphs: a.random_factors,
            seed: a.seed,
        }
        .evaluate(&dataset, Split::Test)
        .map_err(usage)?
    } else {
        let model = load_model(&a.model)?;
        model.config.check_dataset(&dataset).map_err(usage)?;
        evaluate(&model, &dataset, Split::Test)?
    };
    std::fs::write(&a.out, report.to_json()).map_err(|e| Error::io(&a.out, e))?;
    println!("{}", report.summary());
    Ok(())
}

pub fn cmd_correlate(a: &CorrelateArgs) -> Result<()> {
    let dataset = load_dataset(&a.data)?;
    let model = load_model(&a.model)?;
    model.config.check_dataset(&dataset).map_err(usage)?;
    let m = correlate(&model, &dataset, Split::Test)?;
    std::fs::write(&a.out, m.to_csv()).map_err(|e| Error::io(&a.out, e))?;
    println!("wrote {}x{} correlation matrix to {}", m.dim, m.dim, a.out.display());
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let dataset = load_dataset(&a.data)?;
    let base = resolve_config(&dataset, ModelKind::FactorGcn, None, &a.settings)?;
    let settings: Vec<Setting> = match (&a.lambdas, &a.factor_counts) {
        (Some(l), None) => l.iter().map(|&v| Setting::Lambda(v)).collect(),
        (None, Some(f)) => f.iter().map(|&n| Setting::FactorCount(n)).collect(),
        _ => return Err(Error::Usage("give exactly one of --lambdas or --factor-counts".into())),
    };
    let rows = run_sweep(&dataset, &base, &settings);
    write_sweep(&a.out, &rows)?;
    print!("{}", sweep_table(&rows));
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(Error::Input(format!("{failed} of {} settings failed", rows.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn merge_overlays_nested_fields() {
        let mut base = serde_json::json!({"a": 1, "o": {"x": 1, "y": 2}});
        merge_json(&mut base, serde_json::json!({"o": {"y": 5}, "b": 3}));
        assert_eq!(base, serde_json::json!({"a": 1, "b": 3, "o": {"x": 1, "y": 5}}));
    }

    #[test]
    fn report_path_sits_next_to_model() {
        assert_eq!(
            report_path(Path::new("/tmp/run/m.json")),
            PathBuf::from("/tmp/run/m.report.json")
        );
    }
}
