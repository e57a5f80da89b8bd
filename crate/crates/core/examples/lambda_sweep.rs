//! Trains FactorGCN at several discriminator weights and tabulates the test
//! metrics.
//!
//! cargo run --release --example lambda_sweep -- [epochs]

use factorgcn::graph_data::generate_synthetic;
use factorgcn::model::{run_sweep, sweep_table, ModelConfig, ModelKind, Setting};

fn main() -> factorgcn::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let data = generate_synthetic(4, 1000, 7)?;
    let base = ModelConfig {
        epochs,
        ..ModelConfig::for_dataset(&data, ModelKind::FactorGcn)
    };
    let settings: Vec<Setting> = [0.0, 0.2, 0.5, 1.0].into_iter().map(Setting::Lambda).collect();
    print!("{}", sweep_table(&run_sweep(&data, &base, &settings)));
    Ok(())
}
