use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::audio_io::{nearest_index, CoordinateGrid};
use crate::autodiff::{Real, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::{
    decode_on_tape, decode_rows, encode_on_tape, params_on_tape, relative_coord, LatentSequence, ModelConfig,
    ModelWeights,
};

use super::task::{TaskSpec, TrainTask};

/// `nearest_index(t + eta)` with `eta ~ N(0, delta^2)`. No noise is drawn
/// when `delta` is zero.
pub fn perturbed_index(t: f64, grid: &CoordinateGrid, delta: f64, rng: &mut impl Rng) -> usize {
    nearest_index(t + draw_eta(delta, rng), grid)
}

fn draw_eta(delta: f64, rng: &mut impl Rng) -> f64 {
    if delta > 0.0 {
        Normal::new(0.0, delta).expect("positive std").sample(rng)
    } else {
        0.0
    }
}

/// Centers and relative coordinates (input periods) for a set of queries.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedContext {
    pub centers: Vec<usize>,
    pub rel: Vec<f64>,
}

/// One independent perturbed center per coordinate.
pub fn select_centers(coords: &[f64], grid: &CoordinateGrid, delta: f64, rng: &mut impl Rng) -> SelectedContext {
    let centers: Vec<usize> = coords.iter().map(|&t| perturbed_index(t, grid, delta, rng)).collect();
    let rel = coords.iter().zip(&centers).map(|(&t, &c)| relative_coord(t, grid, c)).collect();
    SelectedContext { centers, rel }
}

/// Differentiable prediction of the task's target amplitudes with
/// stochastically selected latents; returns a `[N]` node.
pub fn task_forward<T: Real>(
    tape: &mut Tape<T>,
    params: &[Var],
    cfg: &ModelConfig,
    task: &TrainTask,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<Var> {
    let grid = task.input.grid();
    let z = encode_input(tape, params, cfg, task)?;
    let sel = select_centers(&task.target_coords, &grid, delta, rng);
    let rel: Vec<T> = sel.rel.iter().map(|&r| T::of(r)).collect();
    let rows = tape.gather_context(z, &sel.centers, &rel)?;
    decode_on_tape(tape, params, cfg, rows)
}

fn encode_input<T: Real>(tape: &mut Tape<T>, params: &[Var], cfg: &ModelConfig, task: &TrainTask) -> Result<Var> {
    let needed = 2 * cfg.receptive_half_width() + 1;
    if task.input.len() < needed {
        return Err(Error::TooShort { needed, got: task.input.len() });
    }
    let input: Vec<T> = task.input.samples().iter().map(|&v| T::of(v)).collect();
    let input = tape.constant(Tensor::vector(input));
    encode_on_tape(tape, params, cfg, input)
}

/// Forward pass of [`task_forward`] without keeping the graph.
pub fn perturbed_predict<T: Real>(
    task: &TrainTask,
    weights: &ModelWeights<T>,
    spec: &TaskSpec,
    rng: &mut impl Rng,
) -> Result<Vec<T>> {
    let mut tape = Tape::new();
    let params = params_on_tape(&mut tape, weights);
    let out = task_forward(&mut tape, &params, weights.config(), task, spec.delta(), rng)?;
    Ok(tape.value(out).data().to_vec())
}

/// Cell `i` with `t_i <= t < t_{i+1}` (last cell for `t = t_{L-1}`) and the
/// weight of the right-hand prediction.
fn ensemble_cell(t: f64, grid: &CoordinateGrid) -> (usize, f64) {
    let last = grid.count - 2;
    let mut i = (((t - grid.origin) * grid.rate).floor().max(0.0) as usize).min(last);
    while i < last && grid.time(i + 1) <= t {
        i += 1;
    }
    while i > 0 && grid.time(i) > t {
        i -= 1;
    }
    (i, (t - grid.time(i)) * grid.rate)
}

/// Local-ensemble prediction: the two predictions from the codes flanking
/// `t`, blended linearly by distance. Each flanking prediction uses the
/// usual triplet around its own center and the signed offset from it.
pub fn ensemble_predict<T: Real>(t: f64, latents: &LatentSequence<T>, weights: &ModelWeights<T>) -> Result<T> {
    let grid = latents.grid();
    if grid.count < 2 {
        return Err(Error::TooShort { needed: 2, got: grid.count });
    }
    if !(t >= grid.origin && t <= grid.time(grid.count - 1)) {
        return Err(Error::OutOfSpan(t));
    }
    let (i, w) = ensemble_cell(t, grid);
    let width = 1 + 3 * latents.dim();
    let mut rows = vec![T::zero(); 2 * width];
    for (slot, center) in [i, i + 1].into_iter().enumerate() {
        let row = &mut rows[slot * width..(slot + 1) * width];
        row[0] = T::of(relative_coord(t, grid, center));
        for s in 0..3 {
            if let Some(j) = (center + s).checked_sub(1).filter(|&j| j < grid.count) {
                row[1 + s * latents.dim()..1 + (s + 1) * latents.dim()].copy_from_slice(latents.code(j));
            }
        }
    }
    let out = decode_rows(&rows, weights)?;
    Ok(T::of(w) * out[1] + T::of(1.0 - w) * out[0])
}

/// Differentiable local-ensemble prediction for every target coordinate.
/// Coordinates past the last input sample clamp their blend weight to 1.
pub fn ensemble_forward<T: Real>(tape: &mut Tape<T>, params: &[Var], cfg: &ModelConfig, task: &TrainTask) -> Result<Var> {
    let grid = task.input.grid();
    let z = encode_input(tape, params, cfg, task)?;
    let n = task.target_coords.len();
    let mut centers = Vec::with_capacity(2 * n);
    let mut rel = Vec::with_capacity(2 * n);
    let mut w_left = Vec::with_capacity(n);
    let mut w_right = Vec::with_capacity(n);
    for side in 0..2 {
        for &t in &task.target_coords {
            let (i, w) = ensemble_cell(t, &grid);
            let w = w.clamp(0.0, 1.0);
            centers.push(i + side);
            rel.push(T::of(relative_coord(t, &grid, i + side)));
            if side == 0 {
                w_left.push(T::of(1.0 - w));
                w_right.push(T::of(w));
            }
        }
    }
    let rows = tape.gather_context(z, &centers, &rel)?;
    let pred = decode_on_tape(tape, params, cfg, rows)?;
    let left = tape.slice(pred, 0, n)?;
    let right = tape.slice(pred, n, n)?;
    let wl = tape.constant(Tensor::vector(w_left));
    let wr = tape.constant(Tensor::vector(w_right));
    let a = tape.mul(left, wl)?;
    let b = tape.mul(right, wr)?;
    tape.add(a, b)
}
