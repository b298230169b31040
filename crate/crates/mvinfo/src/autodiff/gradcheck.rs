//! Central finite-difference checking for any tape-built scalar loss.

use crate::autodiff::tape::{Tape, Var};
use crate::autodiff::tensor::Tensor;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;

/// Max relative error between analytic gradients and central finite
/// differences, over every coordinate of every input tensor. `build` must
/// construct the same scalar loss from the given leaves each call.
pub fn max_grad_error(
    inputs: &[Tensor],
    build: impl Fn(&Tape, &[Var]) -> Result<Var>,
) -> Result<f64> {
    let tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = build(&tape, &vars)?;
    let grads = tape.backward(loss)?;

    let eval = |perturbed: &[Tensor]| -> Result<f64> {
        let tape = Tape::new();
        let vars: Vec<Var> = perturbed.iter().map(|t| tape.leaf(t.clone())).collect();
        let loss = build(&tape, &vars)?;
        Ok(tape.scalar_value(loss))
    };

    let mut worst = 0.0f64;
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (ti, var) in vars.iter().enumerate() {
        let analytic = grads.wrt(*var).cloned().unwrap_or_else(|| {
            // input unreachable from the loss: gradient is identically zero
            Tensor::zeros(&inputs[ti].shape)
        });
        for j in 0..inputs[ti].data.len() {
            let orig = work[ti].data[j];
            work[ti].data[j] = orig + FD_STEP;
            let up = eval(&work)?;
            work[ti].data[j] = orig - FD_STEP;
            let down = eval(&work)?;
            work[ti].data[j] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic.data[j];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if err > worst {
                worst = err;
            }
        }
    }
    Ok(worst)
}
