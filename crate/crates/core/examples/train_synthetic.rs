//! Trains FactorGCN on a generated synthetic dataset and prints the
//! per-epoch losses and the test metrics of the kept checkpoint.
//!
//! cargo run --release --example train_synthetic -- [factors] [epochs] [seed]

use factorgcn::graph_data::generate_synthetic;
use factorgcn::model::{train_with_progress, ModelConfig, ModelKind};

fn main() -> factorgcn::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (factors, epochs, seed) = (arg(0, 4) as usize, arg(1, 20) as usize, arg(2, 0));

    let data = generate_synthetic(factors, 1000, 7)?;
    let config = ModelConfig {
        epochs,
        seed,
        ..ModelConfig::for_dataset(&data, ModelKind::FactorGcn)
    };
    let (_, report) = train_with_progress(&data, config, &mut |e| {
        println!(
            "epoch {:>3}  train {:.4}  task {:.4}  disc {:.4}  val {:.4}  val_f1 {:.4}",
            e.epoch,
            e.train_loss,
            e.train_task_loss,
            e.train_disc_loss.unwrap_or(0.0),
            e.val_loss,
            e.val_micro_f1
        );
    })?;
    println!("best epoch {} ({:.1}s)", report.best_epoch, report.wall_clock_secs);
    println!("{}", report.test.summary());
    Ok(())
}
