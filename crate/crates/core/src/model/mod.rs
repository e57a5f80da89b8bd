//! FactorGCN and baseline models, training, evaluation and model files.

mod config;
mod eval;
mod io;
mod network;
mod sweep;
mod train;

pub use config::{default_hidden, ModelConfig, ModelKind, TaskKind, RNG_NAME};
pub use eval::{correlate, evaluate, graph_features, RandomBaseline};
pub use io::{load_model, model_to_json, parse_model, save_model, MODEL_VERSION};
pub use network::{task_loss, total_loss, Forward, Model, Prediction, Target};
pub use sweep::{run_sweep, sweep_table, write_sweep, Setting, SweepRow};
pub use train::{train, train_with_progress, EpochHook, EpochRecord, TrainReport};
