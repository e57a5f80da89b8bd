//! Factorizable graph convolution.
//!
//! A disentangle layer scores every arc of the input graph once per latent
//! factor, aggregates node features separately over each resulting factor
//! graph, and concatenates the per-factor features. An auxiliary
//! discriminator tries to tell the factor graphs apart from structure alone,
//! which pushes them to differ.
//!
//! [`tensor`] holds the autodiff engine and optimizer and [`graph_data`] the
//! synthetic benchmark. [`factor_layer`] and [`discriminator`] are the model
//! building blocks, which [`model`] assembles, trains and saves. [`metrics`]
//! implements the evaluation protocol and [`cli`] the `factorgcn` command.

pub mod cli;
pub mod discriminator;
pub mod error;
pub mod factor_layer;
pub mod graph_data;
pub mod metrics;
pub mod model;
pub mod tensor;

pub use error::{Error, Result};
