use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::autodiff::MAG_FLOOR;
use crate::error::{Error, Result};
use crate::training::hann;

/// STFT used by [`lsd`] and spectrogram dumps (Hann window of `fft_size`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsdConfig {
    pub fft_size: usize,
    pub hop: usize,
}

impl Default for LsdConfig {
    fn default() -> Self {
        Self { fft_size: 2048, hop: 512 }
    }
}

impl LsdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fft_size > self.hop && self.hop > 0) {
            return Err(Error::Config(format!("need fft_size > hop > 0, got {self:?}")));
        }
        Ok(())
    }
}

/// Signal-to-noise ratio in dB; `+inf` when the prediction is exact.
pub fn snr(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::LengthMismatch(x.len(), x_hat.len()));
    }
    let signal: f64 = x.iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return Err(Error::ZeroReference);
    }
    let noise: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// Natural-log power spectrogram `ln max(|STFT|, 1e-7)^2`, one row per
/// frame of `fft_size / 2 + 1` bins. Frames start at multiples of `hop`
/// and never run past the end.
pub fn log_power_spectrogram(x: &[f64], config: &LsdConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let n = config.fft_size;
    if x.len() < n {
        return Err(Error::TooShort { needed: n, got: x.len() });
    }
    let window = hann(n);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let frames = 1 + (x.len() - n) / config.hop;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let seg = &x[f * config.hop..f * config.hop + n];
        for ((b, &s), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        out.push(buf[..n / 2 + 1].iter().map(|c| 2.0 * c.norm().max(MAG_FLOOR).ln()).collect());
    }
    Ok(out)
}

/// Log-spectral distance: RMS over bins of the log-power difference,
/// averaged over frames.
pub fn lsd(x: &[f64], x_hat: &[f64], config: &LsdConfig) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::LengthMismatch(x.len(), x_hat.len()));
    }
    let (a, b) = (log_power_spectrogram(x, config)?, log_power_spectrogram(x_hat, config)?);
    let total: f64 = a
        .iter()
        .zip(&b)
        .map(|(ra, rb)| {
            let ms = ra.iter().zip(rb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / ra.len() as f64;
            ms.sqrt()
        })
        .sum();
    Ok(total / a.len() as f64)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (average ranks for ties). `NaN` when either
/// side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: a.len() });
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    Ok(cov / (va * vb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn snr_examples() {
        let x = noise(1000, 1);
        let half: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(snr(&x, &x).unwrap(), f64::INFINITY);
        assert!((snr(&x, &half).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-9);
        assert!((snr(&x, &neg).unwrap() + 10.0 * 4f64.log10()).abs() < 1e-9);
        assert!(matches!(snr(&[0.0; 4], &[1.0; 4]), Err(Error::ZeroReference)));
        assert!(matches!(snr(&x, &x[..10]), Err(Error::LengthMismatch(1000, 10))));
    }

    #[test]
    fn snr_is_scale_invariant() {
        let (x, y) = (noise(500, 2), noise(500, 3));
        let base = snr(&x, &y).unwrap();
        for c in [-3.0, 0.01, 7.5] {
            let (xs, ys): (Vec<f64>, Vec<f64>) = x.iter().zip(&y).map(|(a, b)| (a * c, b * c)).unzip();
            assert!((snr(&xs, &ys).unwrap() - base).abs() < 1e-9);
        }
    }

    #[test]
    fn lsd_examples() {
        let cfg = LsdConfig::default();
        let x = noise(8192, 4);
        let double: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert_eq!(lsd(&x, &x, &cfg).unwrap(), 0.0);
        assert!((lsd(&x, &double, &cfg).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-9);
        let y = noise(8192, 5);
        assert!(lsd(&x, &y, &cfg).unwrap() > 0.0);
        assert_eq!(lsd(&x, &y, &cfg).unwrap(), lsd(&y, &x, &cfg).unwrap());
        assert!(matches!(lsd(&x[..100], &y[..100], &cfg), Err(Error::TooShort { .. })));
        assert!(LsdConfig { fft_size: 512, hop: 512 }.validate().is_err());
    }

    #[test]
    fn spectrogram_shape() {
        let s = log_power_spectrogram(&noise(5000, 6), &LsdConfig::default()).unwrap();
        assert_eq!(s.len(), 1 + (5000 - 2048) / 512);
        assert_eq!(s[0].len(), 1025);
        let silent = log_power_spectrogram(&[0.0; 2048], &LsdConfig::default()).unwrap();
        assert!(silent[0].iter().all(|&v| v == 2.0 * 1e-7f64.ln()));
    }

    #[test]
    fn spearman_values() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 0.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }
}
