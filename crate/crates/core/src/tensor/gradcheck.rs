//! Central finite-difference gradient checking.
//!
//! The numeric side only evaluates forward values, so it stays independent of
//! every backward rule it is used to verify.

use super::{Tape, Tensor, Var};
use crate::error::Result;

/// Analytic and numeric gradients for each input of a checked function.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub analytic: Vec<Vec<f64>>,
    pub numeric: Vec<Vec<f64>>,
}

impl GradCheck {
    /// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)` over all inputs
    /// jointly. Falls back to the absolute difference when both norms are
    /// below `1e-8`.
    pub fn relative_error(&self) -> f64 {
        let flat = |v: &[Vec<f64>]| v.iter().flatten().copied().collect::<Vec<_>>();
        let (a, n) = (flat(&self.analytic), flat(&self.numeric));
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = a
            .iter()
            .zip(&n)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let denom = norm(&a).max(norm(&n));
        if denom < 1e-8 {
            diff
        } else {
            diff / denom
        }
    }
}

/// Compares the tape's gradient of the scalar `f(inputs)` with central
/// differences of step `step` on every input element.
pub fn check<F>(inputs: &[Tensor], f: F, step: f64) -> Result<GradCheck>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = values.iter().map(|t| tape.constant(t.clone())).collect();
        Ok(f(&tape, &vars)?.item())
    };

    let tape = Tape::new();
    let vars: Vec<Var<'_>> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic = vars.iter().map(|v| grads.wrt(*v).into_data()).collect();

    let mut numeric = Vec::with_capacity(inputs.len());
    let mut work = inputs.to_vec();
    for k in 0..inputs.len() {
        let mut g = vec![0.0; inputs[k].len()];
        for (e, slot) in g.iter_mut().enumerate() {
            let orig = work[k].data()[e];
            work[k].data_mut()[e] = orig + step;
            let plus = eval(&work)?;
            work[k].data_mut()[e] = orig - step;
            let minus = eval(&work)?;
            work[k].data_mut()[e] = orig;
            *slot = (plus - minus) / (2.0 * step);
        }
        numeric.push(g);
    }
    Ok(GradCheck { analytic, numeric })
}
