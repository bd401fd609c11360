use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::{DftBasis, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// One STFT resolution of the spectral loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftScale {
    pub fft_size: usize,
    pub hop: usize,
    pub window_length: usize,
}

/// STFT resolutions (Hann windows) averaged by the spectral loss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralLossConfig {
    pub scales: Vec<StftScale>,
}

impl Default for SpectralLossConfig {
    fn default() -> Self {
        let s = |n, hop| StftScale { fft_size: n, hop, window_length: n };
        Self { scales: vec![s(512, 128), s(1024, 256), s(2048, 512)] }
    }
}

impl SpectralLossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::Config("spectral loss needs at least one scale".into()));
        }
        for s in &self.scales {
            if !(s.fft_size >= s.window_length && s.window_length > s.hop && s.hop > 0) {
                return Err(Error::Config(format!("bad STFT scale {s:?}")));
            }
        }
        Ok(())
    }

    pub fn max_window(&self) -> usize {
        self.scales.iter().map(|s| s.window_length).max().unwrap_or(0)
    }
}

/// Periodic Hann window.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Spectral loss with DFT bases and windows built once.
#[derive(Debug, Clone)]
pub struct PreparedSpectralLoss<T: Real> {
    config: SpectralLossConfig,
    scales: Vec<(StftScale, Arc<DftBasis<T>>, Vec<T>)>,
}

/// Nodes of one loss evaluation. `spec` is absent when the spectral weight
/// is zero, in which case `total` is `wave` itself.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub total: Var,
    pub wave: Var,
    pub spec: Option<Var>,
}

impl<T: Real> PreparedSpectralLoss<T> {
    pub fn new(config: &SpectralLossConfig) -> Result<Self> {
        config.validate()?;
        let scales = config
            .scales
            .iter()
            .map(|&s| {
                let window = hann(s.window_length).into_iter().map(T::of).collect();
                (s, Arc::new(DftBasis::new(s.fft_size)), window)
            })
            .collect();
        Ok(Self { config: config.clone(), scales })
    }

    pub fn config(&self) -> &SpectralLossConfig {
        &self.config
    }

    /// Mean over scales of spectral convergence plus mean absolute
    /// log-magnitude difference.
    pub fn spec_on_tape(&self, tape: &mut Tape<T>, target: Var, pred: Var) -> Result<Var> {
        let (n, m) = (tape.value(target).len(), tape.value(pred).len());
        if n != m {
            return Err(Error::LengthMismatch(n, m));
        }
        let needed = self.config.max_window();
        if n < needed {
            return Err(Error::TooShort { needed, got: n });
        }
        let mut per_scale = Vec::with_capacity(self.scales.len());
        for (s, basis, window) in &self.scales {
            let fx = tape.frame(target, window, s.hop, s.fft_size)?;
            let fp = tape.frame(pred, window, s.hop, s.fft_size)?;
            let mx = tape.dft_magnitude(fx, basis)?;
            let mp = tape.dft_magnitude(fp, basis)?;
            let diff = tape.sub(mx, mp)?;
            let num = tape.frobenius_norm(diff);
            let den = tape.frobenius_norm(mx);
            let sc = tape.div(num, den)?;
            let lx = tape.log(mx);
            let lp = tape.log(mp);
            let lm = tape.l1_loss(lx, lp)?;
            let term = tape.add(sc, lm)?;
            per_scale.push(tape.reshape(term, vec![1])?);
        }
        let all = tape.concat(&per_scale)?;
        Ok(tape.mean(all))
    }

    /// `l1(x, x_hat) + lambda * spec(x, x_hat)`.
    pub fn total_on_tape(&self, tape: &mut Tape<T>, target: Var, pred: Var, lambda: f64) -> Result<LossTerms> {
        let wave = tape.l1_loss(target, pred)?;
        if lambda == 0.0 {
            return Ok(LossTerms { total: wave, wave, spec: None });
        }
        let spec = self.spec_on_tape(tape, target, pred)?;
        let weighted = tape.scale(spec, T::of(lambda));
        let total = tape.add(wave, weighted)?;
        Ok(LossTerms { total, wave, spec: Some(spec) })
    }
}

/// Multi-scale spectral loss between a reference `x` and a prediction.
/// Not symmetric: convergence is normalized by the reference.
pub fn spec_loss(x: &[f64], x_hat: &[f64], config: &SpectralLossConfig) -> Result<f64> {
    let prepared = PreparedSpectralLoss::<f64>::new(config)?;
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::vector(x.to_vec()));
    let b = tape.constant(Tensor::vector(x_hat.to_vec()));
    let v = prepared.spec_on_tape(&mut tape, a, b)?;
    Ok(tape.value(v).item())
}

/// Waveform L1 plus `lambda` times the spectral loss.
pub fn total_loss(x: &[f64], x_hat: &[f64], lambda: f64, config: &SpectralLossConfig) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    let prepared = PreparedSpectralLoss::<f64>::new(config)?;
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::vector(x.to_vec()));
    let b = tape.constant(Tensor::vector(x_hat.to_vec()));
    let terms = prepared.total_on_tape(&mut tape, a, b, lambda)?;
    Ok(tape.value(terms.total).item())
}
