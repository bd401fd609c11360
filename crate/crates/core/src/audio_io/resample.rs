//! Direct-form windowed-sinc resampling.
//!
//! Output sample `j` sits at `t = j / target_rate`; its value is the input
//! convolved with a Kaiser-windowed sinc low-pass whose cutoff is
//! `ROLLOFF * min(rate, target_rate) / 2`. Samples outside the input are zero.

use std::sync::OnceLock;

use super::AudioSignal;
use crate::error::{Error, Result};

/// Kernel half-width in zero crossings of the low-pass sinc.
pub const ZERO_CROSSINGS: usize = 32;
/// Kaiser shape; 9.0 gives roughly 90 dB of stopband rejection.
pub const KAISER_BETA: f64 = 9.0;
/// Cutoff as a fraction of the lower Nyquist frequency, placing the whole
/// transition band below it.
pub const ROLLOFF: f64 = 0.9;

const TABLE_RES: usize = 4096;

/// Modified Bessel function of the first kind, order zero.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// `sinc(u) * kaiser(u / ZERO_CROSSINGS)` sampled on `[0, ZERO_CROSSINGS]`
/// at `TABLE_RES` points per unit. Integer abscissae hold exact zeros.
fn kernel_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = ZERO_CROSSINGS * TABLE_RES;
        let norm = bessel_i0(KAISER_BETA);
        let mut t: Vec<f64> = (0..=n)
            .map(|i| {
                if i == 0 {
                    return 1.0;
                }
                if i % TABLE_RES == 0 {
                    return 0.0;
                }
                let u = i as f64 / TABLE_RES as f64;
                let r = u / ZERO_CROSSINGS as f64;
                let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
                let pu = std::f64::consts::PI * u;
                pu.sin() / pu * w
            })
            .collect();
        t.push(0.0);
        t
    })
}

/// Band-limited resampling to `target_rate`; output length is
/// `round(len * target_rate / rate)`. Equal rates return the input unchanged.
pub fn sinc_resample(signal: &AudioSignal, target_rate: f64) -> Result<AudioSignal> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(Error::InvalidRate(target_rate));
    }
    let rate = signal.rate();
    if target_rate == rate {
        return Ok(signal.clone());
    }
    let x = signal.samples();
    let out_len = (x.len() as f64 * target_rate / rate).round() as usize;
    let scale = ROLLOFF * (target_rate / rate).min(1.0);
    let half = ZERO_CROSSINGS as f64 / scale;
    let step = rate / target_rate;
    let table = kernel_table();
    let last = x.len() as i64 - 1;
    // Kernel argument per input sample, in table units.
    let tstep = scale * TABLE_RES as f64;

    let out = (0..out_len)
        .map(|j| {
            let p = j as f64 * step;
            let lo = ((p - half).ceil() as i64).max(0);
            let hi = ((p + half).floor() as i64).min(last);
            if hi < lo {
                return 0.0;
            }
            let mut d = (p - lo as f64) * tstep;
            let mut acc = 0.0;
            for &v in &x[lo as usize..=hi as usize] {
                let a = d.abs();
                let i = a as usize;
                let (t0, t1) = (table[i], table[i + 1]);
                acc += v * (t0 + (a - i as f64) * (t1 - t0));
                d -= tstep;
            }
            acc * scale
        })
        .collect();
    AudioSignal::new(out, target_rate)
}
