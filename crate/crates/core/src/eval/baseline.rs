use std::fmt;
use std::str::FromStr;

use crate::audio_io::{output_len, sinc_resample, AudioSignal};
use crate::error::{Error, Result};

/// Classical interpolators used as reference points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineMethod {
    Sinc,
    ZeroHold,
    Linear,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 3] = [Self::Sinc, Self::ZeroHold, Self::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sinc => "sinc",
            Self::ZeroHold => "zero-hold",
            Self::Linear => "linear",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline {s:?} (sinc, zero-hold, linear)")))
    }
}

/// Resamples to `rate_out` with a classical method. Zero-hold and linear
/// produce `floor(duration * rate_out)` samples; linear holds the last
/// input sample past the end.
pub fn baseline_upsample(signal: &AudioSignal, rate_out: f64, method: BaselineMethod) -> Result<AudioSignal> {
    if !(rate_out.is_finite() && rate_out > 0.0) {
        return Err(Error::InvalidRate(rate_out));
    }
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    if method == BaselineMethod::Sinc {
        return sinc_resample(signal, rate_out);
    }
    let x = signal.samples();
    let last = x.len() - 1;
    let count = output_len(signal.duration(), rate_out);
    let out = (0..count)
        .map(|m| {
            // Input position of output sample m, nudged so exact grid hits
            // are not lost to rounding.
            let exact = m as f64 / rate_out * signal.rate();
            let i = ((exact + 1e-9).floor() as usize).min(last);
            match method {
                BaselineMethod::ZeroHold => x[i],
                _ if i >= last => x[last],
                _ => {
                    let frac = (exact - i as f64).max(0.0);
                    x[i] + (x[i + 1] - x[i]) * frac
                }
            }
        })
        .collect();
    AudioSignal::new(out, rate_out)
}
