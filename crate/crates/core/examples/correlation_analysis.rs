//! Absolute correlation between the graph-level features of a trained
//! FactorGCN, summarised per factor block.
//!
//! cargo run --release --example correlation_analysis -- [epochs]

use factorgcn::graph_data::{generate_synthetic, Split};
use factorgcn::model::{correlate, train, ModelConfig, ModelKind};

fn main() -> factorgcn::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let data = generate_synthetic(4, 1000, 7)?;
    let config = ModelConfig {
        epochs,
        ..ModelConfig::for_dataset(&data, ModelKind::FactorGcn)
    };
    let block = config.factor_dim(config.num_layers() - 1);
    let (model, _) = train(&data, config)?;
    let m = correlate(&model, &data, Split::Test)?;
    let (within, across) = m.block_means(block)?;
    println!("{} features in blocks of {block}", m.dim);
    println!("mean |r| within blocks {within:.3}, across blocks {across:.3}");
    let path = std::env::temp_dir().join("factorgcn_correlation.csv");
    std::fs::write(&path, m.to_csv()).map_err(|e| factorgcn::Error::Input(e.to_string()))?;
    println!("matrix written to {}", path.display());
    Ok(())
}
