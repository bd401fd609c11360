//! Waveforms, sampling grids and band-limited resampling.

mod resample;
mod wav;

pub use resample::{sinc_resample, KAISER_BETA, ROLLOFF, ZERO_CROSSINGS};
pub use wav::{read_wav, write_wav, BitDepth};

use crate::error::{Error, Result};

/// Mono waveform observed on a uniform grid starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    rate: f64,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidRate(rate));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio samples"));
        }
        Ok(Self { samples, rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seconds covered by the samples: `len / rate`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn grid(&self) -> CoordinateGrid {
        CoordinateGrid::new(self.rate, 0.0, self.samples.len())
    }

    /// Sub-range `[start, start + len)` as a new signal at the same rate.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start.checked_add(len).filter(|&e| e <= self.samples.len());
        match end {
            Some(end) => Ok(Self { samples: self.samples[start..end].to_vec(), rate: self.rate }),
            None => Err(Error::TooShort { needed: start.saturating_add(len), got: self.samples.len() }),
        }
    }
}

/// Uniform time grid `t_i = origin + i / rate` for `i < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateGrid {
    pub rate: f64,
    pub origin: f64,
    pub count: usize,
}

impl CoordinateGrid {
    pub fn new(rate: f64, origin: f64, count: usize) -> Self {
        Self { rate, origin, count }
    }

    pub fn time(&self, i: usize) -> f64 {
        self.origin + i as f64 / self.rate
    }

    /// Uniform grid with `floor(duration * rate)` points, the output grid used
    /// for super-resolution. A tiny tolerance absorbs products such as
    /// `2.5 * n` that land a hair under an integer.
    pub fn covering(duration: f64, rate: f64) -> Self {
        Self::new(rate, 0.0, output_len(duration, rate))
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.time(i)).collect()
    }
}

/// `floor(duration * rate)` with a relative tolerance of 1e-9.
pub fn output_len(duration: f64, rate: f64) -> usize {
    let x = duration * rate;
    (x + x.abs() * 1e-9 + 1e-9).floor().max(0.0) as usize
}

/// Nearest grid index without clamping; exact midpoints go to the smaller index.
pub fn nearest_index_unclamped(t: f64, rate: f64, origin: f64) -> i64 {
    let x = (t - origin) * rate;
    (x - 0.5).ceil() as i64
}

/// `argmin_i |t - t_i|` with ties broken toward the smaller index, clamped to
/// the grid.
///
/// # Panics
/// If the grid is empty.
pub fn nearest_index(t: f64, grid: &CoordinateGrid) -> usize {
    assert!(grid.count > 0, "nearest_index on an empty grid");
    let i = nearest_index_unclamped(t, grid.rate, grid.origin);
    i.clamp(0, grid.count as i64 - 1) as usize
}
