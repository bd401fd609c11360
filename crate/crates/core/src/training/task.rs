use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::{output_len, sinc_resample, AudioSignal};
use crate::error::{Error, Result};

/// Resolutions and loss weights that define the self-supervised tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskSpec {
    /// Input resolution (Hz).
    pub r_in: f64,
    /// Lower end of the target-resolution interval (Hz).
    pub r_out_min: f64,
    /// Upper end of the target-resolution interval (Hz).
    pub r_out_max: f64,
    /// Resolution of the source corpus (Hz).
    pub r_data: f64,
    /// Crop length in seconds.
    pub clip_length: f64,
    /// Weight of the spectrogram term.
    pub lambda: f64,
    /// Standard deviation of the index perturbation in seconds; defaults to
    /// half an input period.
    pub delta: Option<f64>,
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            r_in: 8000.0,
            r_out_min: 8000.0,
            r_out_max: 24000.0,
            r_data: 48000.0,
            clip_length: 0.25,
            lambda: 0.01,
            delta: None,
        }
    }
}

impl TaskSpec {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.5 / self.r_in)
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.r_in, self.r_out_min, self.r_out_max, self.r_data];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Config(format!("rates must be positive: {rates:?}")));
        }
        if !(self.r_in <= self.r_out_min && self.r_out_min <= self.r_out_max && self.r_out_max <= self.r_data) {
            return Err(Error::Config(format!(
                "need r_in <= r_out_min <= r_out_max <= r_data, got {} {} {} {}",
                self.r_in, self.r_out_min, self.r_out_max, self.r_data
            )));
        }
        if !(self.lambda >= 0.0) || !(self.delta() >= 0.0) || !(self.clip_length > 0.0) {
            return Err(Error::Config("lambda and delta must be >= 0 and clip_length > 0".into()));
        }
        Ok(())
    }

    pub fn crop_samples(&self) -> usize {
        (self.clip_length * self.r_data).round() as usize
    }
}

/// One training example: input at `r_in` and supervision at a random rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTask {
    pub input: AudioSignal,
    pub target_rate: f64,
    /// Seconds, spaced exactly `1 / target_rate` from zero.
    pub target_coords: Vec<f64>,
    pub target_amps: Vec<f64>,
}

/// Crops `clip_length` seconds at random, draws the output rate uniformly
/// from `[r_out_min, r_out_max]` and resamples the crop to both rates.
pub fn sample_task(clip: &AudioSignal, spec: &TaskSpec, rng: &mut impl Rng) -> Result<TrainTask> {
    spec.validate()?;
    if clip.rate() != spec.r_data {
        return Err(Error::Config(format!("clip at {} Hz, corpus rate is {}", clip.rate(), spec.r_data)));
    }
    let crop_len = spec.crop_samples();
    if clip.len() < crop_len || crop_len == 0 {
        return Err(Error::TooShort { needed: crop_len.max(1), got: clip.len() });
    }
    let start = rng.random_range(0..=clip.len() - crop_len);
    let target_rate = spec.r_out_min + (spec.r_out_max - spec.r_out_min) * rng.random::<f64>();
    let crop = clip.slice(start, crop_len)?;
    let input = sinc_resample(&crop, spec.r_in)?;
    let mut target_amps = sinc_resample(&crop, target_rate)?.into_samples();
    target_amps.truncate(output_len(crop.duration(), target_rate));
    let target_coords = (0..target_amps.len()).map(|j| j as f64 / target_rate).collect();
    Ok(TrainTask { input, target_rate, target_coords, target_amps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;

    fn clip(n: usize) -> AudioSignal {
        AudioSignal::new(
            (0..n).map(|i| (i as f64 * 0.05).sin() * 0.5 + (i as f64 * 0.011).cos() * 0.3).collect(),
            48000.0,
        )
        .unwrap()
    }

    #[test]
    fn validates_spec() {
        assert!(TaskSpec::default().validate().is_ok());
        let bad = TaskSpec { r_out_min: 4000.0, ..TaskSpec::default() };
        assert!(bad.validate().is_err());
        let bad = TaskSpec { lambda: -1.0, ..TaskSpec::default() };
        assert!(bad.validate().is_err());
        assert_eq!(TaskSpec::default().delta(), 1.0 / 16000.0);
    }

    #[test]
    fn output_rate_statistics() {
        let spec = TaskSpec::default();
        let c = clip(12000);
        let mut rng = derive_rng(1, &[]);
        // Draw rates directly with the same formula the sampler uses, plus a
        // few full tasks to make sure the sampler agrees with it.
        let rates: Vec<f64> = (0..10_000)
            .map(|_| {
                let _ = rng.random_range(0..=0usize);
                spec.r_out_min + (spec.r_out_max - spec.r_out_min) * rng.random::<f64>()
            })
            .collect();
        let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = rates.iter().cloned().fold(0.0, f64::max);
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!(min >= 8000.0 && max <= 24000.0);
        assert!((mean - 16000.0).abs() < 200.0, "{mean}");

        let mut a = derive_rng(1, &[]);
        for &r in &rates[..5] {
            let t = sample_task(&c, &spec, &mut a).unwrap();
            assert_eq!(t.target_rate, r);
        }
    }

    #[test]
    fn degenerate_interval_spacing() {
        let spec = TaskSpec { r_out_min: 16000.0, r_out_max: 16000.0, ..TaskSpec::default() };
        let mut rng = derive_rng(2, &[]);
        let t = sample_task(&clip(20000), &spec, &mut rng).unwrap();
        assert_eq!(t.target_rate, 16000.0);
        assert_eq!(t.target_coords.len(), 4000);
        for (j, &c) in t.target_coords.iter().enumerate() {
            assert_eq!(c, j as f64 / 16000.0);
        }
        assert_eq!(t.input.len(), 2000);
        assert_eq!(t.input.rate(), 8000.0);
    }

    #[test]
    fn seeded_tasks_are_identical() {
        let spec = TaskSpec::default();
        let c = clip(30000);
        let a = sample_task(&c, &spec, &mut derive_rng(9, &[3])).unwrap();
        let b = sample_task(&c, &spec, &mut derive_rng(9, &[3])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn short_clip_is_rejected() {
        let spec = TaskSpec::default();
        let r = sample_task(&clip(100), &spec, &mut derive_rng(0, &[]));
        assert!(matches!(r, Err(Error::TooShort { .. })));
    }
}
