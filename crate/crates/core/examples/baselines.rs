//! Trains FactorGCN next to the MLP and GCN baselines on the same data.
//!
//! cargo run --release --example baselines -- [epochs]

use factorgcn::graph_data::generate_synthetic;
use factorgcn::model::{train, ModelConfig, ModelKind};

fn main() -> factorgcn::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let data = generate_synthetic(4, 1000, 7)?;
    for kind in [ModelKind::Mlp, ModelKind::Gcn, ModelKind::FactorGcn] {
        let config = ModelConfig {
            epochs,
            ..ModelConfig::for_dataset(&data, kind)
        };
        let (_, report) = train(&data, config)?;
        println!(
            "{kind:<10} test micro_f1 {:.4}  best epoch {:>3}  {:.1}s",
            report.test.micro_f1.unwrap_or(f64::NAN),
            report.best_epoch,
            report.wall_clock_secs
        );
    }
    Ok(())
}
