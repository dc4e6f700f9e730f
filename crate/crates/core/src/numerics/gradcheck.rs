//! Central finite-difference oracle shared by unit tests.

use crate::error::Result;
use crate::numerics::{Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-5;

/// Relative error with a small denominator floor so that near-zero
/// gradients are compared on an absolute scale.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Largest relative error between tape gradients and central differences of
/// `f` with respect to every entry of every input.
pub fn max_rel_error<F>(inputs: &[Tensor], f: F) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = f(&tape, &vars)?;
    tape.backward(loss)?;
    let eval = |ins: &[Tensor]| -> Result<f64> {
        let tp = Tape::new();
        let vs: Vec<Var> = ins.iter().map(|t| tp.leaf(t.clone())).collect();
        Ok(f(&tp, &vs)?.value().item())
    };
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = tape.grad(*v).unwrap_or_else(|| Tensor::zeros(inputs[i].shape()));
        for j in 0..inputs[i].numel() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= FD_STEP;
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic.data()[j], numeric));
        }
    }
    Ok(worst)
}
