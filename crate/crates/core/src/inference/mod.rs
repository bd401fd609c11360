//! Arbitrary-scale super-resolution, offline and streaming.

mod stream;

pub use stream::StreamSession;

use crate::audio_io::{AudioSignal, CoordinateGrid};
use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::model::{predict, ModelWeights};

/// Evaluates the model on the uniform grid `m / rate_out` covering the
/// signal's duration; the output has `floor(duration * rate_out)` samples.
pub fn upsample<T: Real>(signal: &AudioSignal, weights: &ModelWeights<T>, rate_out: f64) -> Result<AudioSignal> {
    if !(rate_out.is_finite() && rate_out > 0.0) {
        return Err(Error::InvalidRate(rate_out));
    }
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    let grid = CoordinateGrid::covering(signal.duration(), rate_out);
    let out = predict(signal, weights, &grid.coords())?;
    AudioSignal::new(out.into_iter().map(|v| v.as_f64()).collect(), rate_out)
}
