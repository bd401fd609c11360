use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio_io::AudioSignal;
use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// Random sums of (possibly chirping) sinusoids with a speech-like
/// spectral tilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub clips: usize,
    pub duration: f64,
    pub rate: f64,
    pub min_partials: usize,
    pub max_partials: usize,
    /// Start frequencies are log-uniform in `[f_min, f_max]` (the first
    /// partial in `[f_min, knee]`).
    pub f_min: f64,
    pub f_max: f64,
    /// Largest glide over a clip, in octaves (either direction).
    pub max_chirp_octaves: f64,
    /// Amplitudes fall as `(f / knee)^-slope` above `knee`.
    pub knee: f64,
    pub slope: f64,
    /// Peak absolute amplitude after normalization.
    pub peak: f64,
    /// Standard deviation of white noise added after normalization.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            clips: 256,
            duration: 0.25,
            rate: 48000.0,
            min_partials: 1,
            max_partials: 8,
            f_min: 60.0,
            f_max: 12000.0,
            max_chirp_octaves: 1.0,
            knee: 1000.0,
            slope: 1.5,
            peak: 0.5,
            noise: 1e-3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.duration > 0.0
            && self.rate > 0.0
            && self.min_partials >= 1
            && self.min_partials <= self.max_partials
            && self.f_min > 0.0
            && self.f_min <= self.f_max
            && 2.0 * self.f_max < self.rate
            && self.max_chirp_octaves >= 0.0
            && self.knee > 0.0
            && self.peak > 0.0
            && self.noise >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid synth config {self:?}")))
        }
    }
}

/// Clip number `index` of the corpus defined by `config`.
pub fn synth_clip(config: &SynthConfig, index: usize) -> Result<AudioSignal> {
    config.validate()?;
    let mut rng = derive_rng(config.seed, &[0x5e17, index as u64]);
    let n = (config.duration * config.rate).round() as usize;
    let nyquist_guard = 0.45 * config.rate;
    let partials = rng.random_range(config.min_partials..=config.max_partials);
    let mut x = vec![0.0; n];
    for p in 0..partials {
        // The first partial sits below the knee, like a voice fundamental;
        // this keeps every clip audible at every target rate.
        let f_hi = if p == 0 { config.knee.min(config.f_max) } else { config.f_max };
        let f0 = config.f_min * (f_hi / config.f_min).powf(rng.random::<f64>());
        // Glide in octaves over the clip, kept below the Nyquist guard.
        let max_up = (nyquist_guard / f0).log2().min(config.max_chirp_octaves);
        let oct = rng.random_range(-config.max_chirp_octaves..=config.max_chirp_octaves).min(max_up);
        let tilt = if f0 > config.knee { (f0 / config.knee).powf(-config.slope) } else { 1.0 };
        let amp = tilt * rng.random_range(0.5..1.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let rate_oct = oct / config.duration;
        for (i, v) in x.iter_mut().enumerate() {
            let t = i as f64 / config.rate;
            // Integral of f0 * 2^(rate_oct * t).
            let cycles = if rate_oct.abs() < 1e-12 {
                f0 * t
            } else {
                f0 * ((rate_oct * t * LN_2).exp() - 1.0) / (rate_oct * LN_2)
            };
            *v += amp * (2.0 * PI * cycles + phase).sin();
        }
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= config.peak / peak);
    }
    if config.noise > 0.0 {
        let dist = Normal::new(0.0, config.noise).map_err(|e| Error::Config(e.to_string()))?;
        x.iter_mut().for_each(|v| *v += dist.sample(&mut rng));
    }
    AudioSignal::new(x, config.rate)
}

/// `config.clips` clips named `synth_0000.wav`, ... in order.
pub fn synth_corpus(config: &SynthConfig) -> Result<Vec<(String, AudioSignal)>> {
    (0..config.clips).map(|i| Ok((format!("synth_{i:04}.wav"), synth_clip(config, i)?))).collect()
}
