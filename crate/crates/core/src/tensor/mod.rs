//! Dense tensors, a reverse-mode autodiff tape and the Adam optimizer.
//!
//! Forward passes record onto a fresh [`Tape`] per step. Parameters live in a
//! [`ParamSet`]; `bind` records them as trainable leaves, `backward` returns
//! [`Gradients`], and `ParamSet::accumulate` adds them into the tensors'
//! gradient buffers (`+=`) until `zero_grads` is called.

mod adam;
mod dense;
pub mod gradcheck;
mod params;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use dense::Tensor;
pub use params::{Bound, ParamSet};
pub use tape::{sigmoid, Gradients, MessagePlan, Tape, Var, PROB_CLIP};

use crate::error::Result;

/// Task losses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `pred` holds probabilities, target holds 0/1 values.
    BinaryCrossEntropy,
    /// `pred` holds one row of logits per sample, target holds class indices.
    CrossEntropy,
    /// Mean absolute error.
    L1,
}

/// Target operand of [`loss`].
#[derive(Clone, Copy, Debug)]
pub enum LossTarget<'a> {
    Values(&'a [f64]),
    Classes(&'a [usize]),
}

/// Scalar mean loss of `pred` against `target`.
pub fn loss<'t>(kind: LossKind, pred: Var<'t>, target: LossTarget<'_>) -> Result<Var<'t>> {
    use crate::error::Error;
    match (kind, target) {
        (LossKind::BinaryCrossEntropy, LossTarget::Values(t)) => pred.bce(t),
        (LossKind::L1, LossTarget::Values(t)) => pred.l1(t),
        (LossKind::CrossEntropy, LossTarget::Classes(t)) => pred.cross_entropy(t),
        (kind, _) => Err(Error::input(format!(
            "{kind:?} loss given the wrong kind of target"
        ))),
    }
}
