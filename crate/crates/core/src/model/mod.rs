//! Convolutional encoder, coordinate-conditioned MLP decoder, and the
//! glue that turns a signal plus query times into amplitudes.

mod config;
mod weights;

pub use config::ModelConfig;
pub use weights::ModelWeights;

use crate::audio_io::{nearest_index, AudioSignal, CoordinateGrid};
use crate::autodiff::kernels::{conv1d_same, dense_forward, relu_inplace};
use crate::autodiff::{Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Rows decoded per batch in [`predict`]; only bounds memory.
const DECODE_CHUNK: usize = 4096;

/// One latent code per input sample, aligned with the input grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSequence<T = f32> {
    codes: Tensor<T>,
    grid: CoordinateGrid,
}

impl<T: Real> LatentSequence<T> {
    /// Codes as `[count, dim]`.
    pub fn codes(&self) -> &Tensor<T> {
        &self.codes
    }

    pub fn grid(&self) -> &CoordinateGrid {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.grid.count
    }

    pub fn dim(&self) -> usize {
        self.codes.shape()[1]
    }

    pub fn code(&self, i: usize) -> &[T] {
        let d = self.dim();
        &self.codes.data()[i * d..(i + 1) * d]
    }
}

/// Offset of `t` from grid point `center`, in input sampling periods.
pub fn relative_coord(t: f64, grid: &CoordinateGrid, center: usize) -> f64 {
    (t - grid.time(center)) * grid.rate
}

/// Runs the encoder over channel-major activations; returns `[C, L]`.
pub(crate) fn encoder_forward<T: Real>(input: &[T], weights: &ModelWeights<T>) -> Vec<T> {
    let cfg = weights.config();
    let layers = cfg.kernel_sizes.len();
    let len = input.len();
    let mut act = input.to_vec();
    let mut c_in = 1;
    for l in 0..layers {
        let (w, b) = weights.encoder_layer(l);
        let (c_out, k) = (cfg.channels[l], cfg.kernel_sizes[l]);
        let (mut out, _) = conv1d_same(&act, c_in, len, w.data(), b.data(), c_out, k);
        if l + 1 < layers {
            relu_inplace(&mut out);
        }
        act = out;
        c_in = c_out;
    }
    act
}

/// Decoder over `rows` inputs of width `1 + 3 * latent_dim`; one amplitude
/// per row.
pub fn decode_rows<T: Real>(rows: &[T], weights: &ModelWeights<T>) -> Result<Vec<T>> {
    let cfg = weights.config();
    let width = cfg.decoder_input_dim();
    if rows.len() % width != 0 {
        return Err(Error::Shape(format!("decoder rows of width {width}, got {} values", rows.len())));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("decoder input"));
    }
    let n = rows.len() / width;
    let layers = cfg.decoder_layers;
    let mut act = rows.to_vec();
    let mut d_in = width;
    for l in 0..layers {
        let (w, b) = weights.decoder_layer(l);
        let d_out = w.shape()[0];
        let mut out = dense_forward(&act, n, d_in, w.data(), b.data(), d_out);
        if l + 1 < layers {
            relu_inplace(&mut out);
        }
        act = out;
        d_in = d_out;
    }
    Ok(act)
}

/// Latent codes `z_i` for every input sample.
pub fn encode<T: Real>(signal: &AudioSignal, weights: &ModelWeights<T>) -> Result<LatentSequence<T>> {
    let cfg = weights.config();
    let needed = 2 * cfg.receptive_half_width() + 1;
    if signal.len() < needed {
        return Err(Error::TooShort { needed, got: signal.len() });
    }
    let input: Vec<T> = signal.samples().iter().map(|&v| T::of(v)).collect();
    let len = input.len();
    let dim = cfg.latent_dim();
    let chan_major = encoder_forward(&input, weights);
    let mut codes = vec![T::zero(); len * dim];
    for c in 0..dim {
        for i in 0..len {
            codes[i * dim + c] = chan_major[c * len + i];
        }
    }
    Ok(LatentSequence { codes: Tensor::new(vec![len, dim], codes)?, grid: signal.grid() })
}

/// Writes `[rel, z_{c-1}, z_c, z_{c+1}]` for center `c` into `row`, with zero
/// codes for neighbours past either end.
fn fill_row<T: Real>(row: &mut [T], latents: &LatentSequence<T>, center: usize, rel: f64) {
    let dim = latents.dim();
    row[0] = T::of(rel);
    for slot in 0..3 {
        let dst = &mut row[1 + slot * dim..1 + (slot + 1) * dim];
        match (center + slot).checked_sub(1).filter(|&i| i < latents.count()) {
            Some(i) => dst.copy_from_slice(latents.code(i)),
            None => dst.fill(T::zero()),
        }
    }
}

/// Relative coordinate and the concatenated code triplet around `t`.
pub fn gather_context<T: Real>(latents: &LatentSequence<T>, t: f64) -> (T, Vec<T>) {
    let center = nearest_index(t, &latents.grid);
    let rel = relative_coord(t, &latents.grid, center);
    let mut row = vec![T::zero(); 1 + 3 * latents.dim()];
    fill_row(&mut row, latents, center, rel);
    let triplet = row.split_off(1);
    (row[0], triplet)
}

/// Amplitude for one relative coordinate and code triplet.
pub fn decode<T: Real>(rel: T, triplet: &[T], weights: &ModelWeights<T>) -> Result<T> {
    let mut row = Vec::with_capacity(1 + triplet.len());
    row.push(rel);
    row.extend_from_slice(triplet);
    Ok(decode_rows(&row, weights)?[0])
}

/// Decoder rows for a list of query times, centered on their nearest input
/// samples.
pub fn context_rows<T: Real>(latents: &LatentSequence<T>, coords: &[f64]) -> Vec<T> {
    let width = 1 + 3 * latents.dim();
    let mut rows = vec![T::zero(); coords.len() * width];
    for (row, &t) in rows.chunks_exact_mut(width).zip(coords) {
        let center = nearest_index(t, &latents.grid);
        fill_row(row, latents, center, relative_coord(t, &latents.grid, center));
    }
    rows
}

/// Encodes once and decodes every coordinate (seconds).
pub fn predict<T: Real>(signal: &AudioSignal, weights: &ModelWeights<T>, coords: &[f64]) -> Result<Vec<T>> {
    let latents = encode(signal, weights)?;
    predict_from_latents(&latents, weights, coords)
}

pub fn predict_from_latents<T: Real>(
    latents: &LatentSequence<T>,
    weights: &ModelWeights<T>,
    coords: &[f64],
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(coords.len());
    for chunk in coords.chunks(DECODE_CHUNK) {
        out.extend(decode_rows(&context_rows(latents, chunk), weights)?);
    }
    Ok(out)
}

/// Parameter leaves for every weight tensor, in [`ModelWeights::params`] order.
pub fn params_on_tape<T: Real>(tape: &mut Tape<T>, weights: &ModelWeights<T>) -> Vec<Var> {
    weights.params().iter().map(|p| tape.param(p.clone())).collect()
}

/// Encoder on a tape; returns latents as `[C, L]`.
pub fn encode_on_tape<T: Real>(tape: &mut Tape<T>, params: &[Var], cfg: &ModelConfig, input: Var) -> Result<Var> {
    let layers = cfg.kernel_sizes.len();
    let len = tape.value(input).len();
    let mut x = tape.reshape(input, vec![1, len])?;
    for l in 0..layers {
        x = tape.conv1d(x, params[2 * l], params[2 * l + 1])?;
        if l + 1 < layers {
            x = tape.relu(x);
        }
    }
    Ok(x)
}

/// Decoder on a tape over `[N, 1 + 3 * dim]` rows; returns `[N]`.
pub fn decode_on_tape<T: Real>(tape: &mut Tape<T>, params: &[Var], cfg: &ModelConfig, rows: Var) -> Result<Var> {
    let offset = 2 * cfg.kernel_sizes.len();
    let layers = cfg.decoder_layers;
    let n = tape.value(rows).shape()[0];
    let mut x = rows;
    for l in 0..layers {
        x = tape.dense(x, params[offset + 2 * l], params[offset + 2 * l + 1])?;
        if l + 1 < layers {
            x = tape.relu(x);
        }
    }
    tape.reshape(x, vec![n])
}

#[cfg(test)]
mod tests;
