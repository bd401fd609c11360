//! Central-difference verification of reverse-mode gradients in f64.

use rand::seq::index::sample;

use super::{Tape, Tensor, Var};
use crate::error::Result;
use crate::rng::derive_rng;

/// Gradients smaller than this are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-3;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn eval<F>(f: &F, inputs: &[Tensor<f64>]) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    Ok(tape.value(out).item())
}

/// Largest relative error between reverse-mode and central-difference
/// gradients of the scalar `f` over every input element.
pub fn grad_check<F>(f: F, inputs: &[Tensor<f64>], h: f64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    check(&f, inputs, h, None)
}

/// Like [`grad_check`] but probes at most `per_input` randomly chosen
/// elements of each input.
pub fn grad_check_sampled<F>(f: F, inputs: &[Tensor<f64>], h: f64, per_input: usize, seed: u64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    check(&f, inputs, h, Some((per_input, seed)))
}

fn check<F>(f: &F, inputs: &[Tensor<f64>], h: f64, sampling: Option<(usize, u64)>) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut worst: f64 = 0.0;
    let mut probe = inputs.to_vec();
    for (i, var) in vars.iter().enumerate() {
        let analytic = grads.get_or_zeros(*var);
        let n = inputs[i].len();
        let coords: Vec<usize> = match sampling {
            Some((per, seed)) if per < n => sample(&mut derive_rng(seed, &[i as u64]), n, per).into_vec(),
            _ => (0..n).collect(),
        };
        for j in coords {
            let orig = inputs[i].data()[j];
            probe[i].data_mut()[j] = orig + h;
            let up = eval(f, &probe)?;
            probe[i].data_mut()[j] = orig - h;
            let down = eval(f, &probe)?;
            probe[i].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic.data()[j], numeric));
        }
    }
    Ok(worst)
}
