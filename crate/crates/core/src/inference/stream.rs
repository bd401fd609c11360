use std::sync::Arc;

use crate::audio_io::{nearest_index, nearest_index_unclamped, output_len, CoordinateGrid};
use crate::autodiff::kernels::{conv1d_valid, relu_inplace};
use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::model::{decode_rows, relative_coord, ModelWeights};

/// Drop consumed history once this many positions have piled up.
const TRIM_SLACK: usize = 512;

/// Incremental state of one encoder layer: the tail of its input
/// activations and how many outputs have been produced.
#[derive(Debug, Clone)]
struct Layer<T> {
    index: usize,
    c_in: usize,
    c_out: usize,
    k: usize,
    relu: bool,
    /// Channel-major input history covering positions `[base, avail)`.
    buf: Vec<Vec<T>>,
    base: usize,
    avail: usize,
    done: usize,
}

impl<T: Real> Layer<T> {
    fn half(&self) -> usize {
        (self.k - 1) / 2
    }

    fn push(&mut self, chan_major: &[T], n: usize) {
        for (c, ch) in self.buf.iter_mut().enumerate() {
            ch.extend_from_slice(&chan_major[c * n..(c + 1) * n]);
        }
        self.avail += n;
    }

    /// Computes every output whose window is complete (or, once `closed`,
    /// every remaining output with zeros past the end). Returns the new
    /// outputs channel-major and their count.
    fn advance(&mut self, weights: &ModelWeights<T>, closed: bool) -> (Vec<T>, usize) {
        let h = self.half();
        let target = if closed { self.avail } else { self.avail.saturating_sub(h) };
        if target <= self.done {
            return (Vec::new(), 0);
        }
        let n = target - self.done;
        let width = n + 2 * h;
        let start = self.done as isize - h as isize;
        let mut window = vec![T::zero(); self.c_in * width];
        for (c, ch) in self.buf.iter().enumerate() {
            for j in 0..width {
                let p = start + j as isize;
                if p >= 0 && (p as usize) < self.avail {
                    window[c * width + j] = ch[p as usize - self.base];
                }
            }
        }
        let (w, b) = weights.encoder_layer(self.index);
        let (mut out, _) = conv1d_valid(&window, self.c_in, width, w.data(), b.data(), self.c_out, self.k);
        if self.relu {
            relu_inplace(&mut out);
        }
        self.done = target;
        let keep_from = self.done.saturating_sub(h);
        if keep_from >= self.base + TRIM_SLACK {
            let drop = keep_from - self.base;
            self.buf.iter_mut().for_each(|ch| {
                ch.drain(..drop);
            });
            self.base = keep_from;
        }
        (out, n)
    }
}

/// Chunked super-resolution with bounded lookahead.
///
/// The output sample at `t` is released as soon as input samples up to
/// index `i(t) + 1 + k` have been pushed, where `i(t)` is the nearest input
/// index and `k` the encoder's receptive half-width. Concatenating the
/// outputs of every [`push`](Self::push) and the final
/// [`close`](Self::close) reproduces [`upsample`](super::upsample) on the
/// whole signal bit for bit. Output starts flowing before the
/// `2k + 1` samples [`upsample`](super::upsample) requires; a stream that
/// ends shorter than that still fails at [`close`](Self::close).
#[derive(Debug, Clone)]
pub struct StreamSession<T: Real = f32> {
    weights: Arc<ModelWeights<T>>,
    rate_in: f64,
    rate_out: f64,
    layers: Vec<Layer<T>>,
    /// Position-major latent codes for positions `[codes_base, codes_len)`.
    codes: Vec<T>,
    codes_base: usize,
    codes_len: usize,
    pushed: usize,
    emitted: usize,
    closed: bool,
}

impl<T: Real> StreamSession<T> {
    pub fn new(weights: Arc<ModelWeights<T>>, rate_in: f64, rate_out: f64) -> Result<Self> {
        for r in [rate_in, rate_out] {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidRate(r));
            }
        }
        let cfg = weights.config().clone();
        let count = cfg.kernel_sizes.len();
        let mut c_in = 1;
        let layers = cfg
            .kernel_sizes
            .iter()
            .zip(&cfg.channels)
            .enumerate()
            .map(|(index, (&k, &c_out))| {
                let l = Layer {
                    index,
                    c_in,
                    c_out,
                    k,
                    relu: index + 1 < count,
                    buf: vec![Vec::new(); c_in],
                    base: 0,
                    avail: 0,
                    done: 0,
                };
                c_in = c_out;
                l
            })
            .collect();
        Ok(Self {
            weights,
            rate_in,
            rate_out,
            layers,
            codes: Vec::new(),
            codes_base: 0,
            codes_len: 0,
            pushed: 0,
            emitted: 0,
            closed: false,
        })
    }

    /// Input samples a query waits for beyond its nearest index: `k + 1`.
    pub fn lookahead(&self) -> usize {
        self.weights.config().receptive_half_width() + 1
    }

    pub fn rate_in(&self) -> f64 {
        self.rate_in
    }

    pub fn rate_out(&self) -> f64 {
        self.rate_out
    }

    /// Input samples received so far.
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// Output samples released so far; the next one is at
    /// `emitted / rate_out` seconds.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Appends input and returns every output sample that became ready.
    pub fn push(&mut self, samples: &[f64]) -> Result<Vec<T>> {
        if self.closed {
            return Err(Error::SessionClosed);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("stream input"));
        }
        if samples.is_empty() {
            return Ok(Vec::new());
        }
        let input: Vec<T> = samples.iter().map(|&v| T::of(v)).collect();
        self.layers[0].push(&input, input.len());
        self.pushed += input.len();
        self.run_encoder(false);
        self.emit(false)
    }

    /// Ends the stream and flushes the remaining output with the same edge
    /// handling as the offline path.
    pub fn close(&mut self) -> Result<Vec<T>> {
        if self.closed {
            return Err(Error::SessionClosed);
        }
        self.closed = true;
        if self.pushed == 0 {
            return Err(Error::EmptyInput);
        }
        let needed = 2 * self.weights.config().receptive_half_width() + 1;
        if self.pushed < needed {
            return Err(Error::TooShort { needed, got: self.pushed });
        }
        self.run_encoder(true);
        self.emit(true)
    }

    fn run_encoder(&mut self, closed: bool) {
        let weights = Arc::clone(&self.weights);
        for l in 0..self.layers.len() {
            let (out, n) = self.layers[l].advance(&weights, closed);
            if n == 0 {
                continue;
            }
            match self.layers.get_mut(l + 1) {
                Some(next) => next.push(&out, n),
                None => {
                    let dim = self.layers[l].c_out;
                    let start = self.codes.len();
                    self.codes.resize(start + n * dim, T::zero());
                    for i in 0..n {
                        for c in 0..dim {
                            self.codes[start + i * dim + c] = out[c * n + i];
                        }
                    }
                    self.codes_len += n;
                }
            }
        }
    }

    fn ready(&self, m: usize) -> bool {
        let t = m as f64 / self.rate_out;
        let i = nearest_index_unclamped(t, self.rate_in, 0.0);
        let limit = output_len(self.pushed as f64 / self.rate_in, self.rate_out);
        m < limit && i + self.lookahead() as i64 + 1 <= self.pushed as i64
    }

    fn emit(&mut self, closed: bool) -> Result<Vec<T>> {
        let end = if closed {
            output_len(self.pushed as f64 / self.rate_in, self.rate_out)
        } else {
            let mut m = self.emitted;
            while self.ready(m) {
                m += 1;
            }
            m
        };
        if end <= self.emitted {
            return Ok(Vec::new());
        }
        let grid = CoordinateGrid::new(self.rate_in, 0.0, self.pushed);
        let dim = self.weights.config().latent_dim();
        let width = 1 + 3 * dim;
        let mut rows = vec![T::zero(); (end - self.emitted) * width];
        for (row, m) in rows.chunks_exact_mut(width).zip(self.emitted..end) {
            let t = m as f64 / self.rate_out;
            let c = nearest_index(t, &grid);
            row[0] = T::of(relative_coord(t, &grid, c));
            for slot in 0..3 {
                let Some(j) = (c + slot).checked_sub(1).filter(|&j| j < self.pushed) else { continue };
                debug_assert!(j >= self.codes_base && j < self.codes_len);
                let src = (j - self.codes_base) * dim;
                row[1 + slot * dim..1 + (slot + 1) * dim].copy_from_slice(&self.codes[src..src + dim]);
            }
        }
        let out = decode_rows(&rows, &self.weights)?;
        self.emitted = end;
        self.trim_codes();
        Ok(out)
    }

    fn trim_codes(&mut self) {
        let t = self.emitted as f64 / self.rate_out;
        let next = nearest_index_unclamped(t, self.rate_in, 0.0).max(0) as usize;
        let keep_from = next.saturating_sub(1).min(self.codes_len);
        if keep_from >= self.codes_base + TRIM_SLACK {
            let dim = self.weights.config().latent_dim();
            self.codes.drain(..(keep_from - self.codes_base) * dim);
            self.codes_base = keep_from;
        }
    }
}
