use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio_io::{sinc_resample, AudioSignal};
use crate::error::{Error, Result};
use crate::inference::upsample;
use crate::model::ModelWeights;
use crate::rng::fnv1a;

use super::baseline::{baseline_upsample, BaselineMethod};
use super::corpus::{align_lengths, NamedSignal};
use super::metrics::{lsd, snr, LsdConfig};

/// How test clips are turned into (input, reference) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Rate of the low-resolution input; the output rate is
    /// `scale * rate_in`.
    pub rate_in: f64,
    pub lsd: LsdConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { rate_in: 8000.0, lsd: LsdConfig::default() }
    }
}

/// Something that maps a low-rate signal to a requested rate.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Model { weights: &'a ModelWeights<f32>, id: &'a str },
    Baseline(BaselineMethod),
}

impl Predictor<'_> {
    pub fn id(&self) -> String {
        match self {
            Self::Model { id, .. } => id.to_string(),
            Self::Baseline(m) => m.name().to_string(),
        }
    }

    pub fn run(&self, input: &AudioSignal, rate_out: f64) -> Result<AudioSignal> {
        match self {
            Self::Model { weights, .. } => upsample(input, *weights, rate_out),
            Self::Baseline(m) => baseline_upsample(input, rate_out, *m),
        }
    }

    fn fingerprint(&self) -> Vec<u8> {
        match self {
            Self::Model { weights, .. } => weights.to_checkpoint().to_bytes(),
            Self::Baseline(m) => m.name().as_bytes().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileResult {
    pub file: String,
    pub snr_db: f64,
    pub lsd: f64,
}

/// Scores one prediction against its reference, tolerating up to two
/// samples of length difference.
pub fn score_pair(file: &str, reference: &[f64], prediction: &[f64], config: &LsdConfig) -> Result<FileResult> {
    let (r, p) = align_lengths(reference, prediction)?;
    Ok(FileResult { file: file.to_string(), snr_db: snr(r, p)?, lsd: lsd(r, p, config)? })
}

/// Per-file and mean metrics of one predictor at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub scale: f64,
    pub config_hash: String,
    /// Sorted by file name.
    pub files: Vec<FileResult>,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "file,scale,model,snr_db,lsd,files,config_hash";

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn mean_snr(&self) -> f64 {
        self.files.iter().map(|f| f.snr_db).sum::<f64>() / self.files.len() as f64
    }

    pub fn mean_lsd(&self) -> f64 {
        self.files.iter().map(|f| f.lsd).sum::<f64>() / self.files.len() as f64
    }

    /// Rows without the header: one per file, then a `mean` row.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        let mut row = |file: &str, snr: f64, lsd: f64, n: usize| {
            let _ = writeln!(
                s,
                "{file},{},{},{snr:.6},{lsd:.6},{n},{}",
                self.scale, self.model, self.config_hash
            );
        };
        for f in &self.files {
            row(&f.file, f.snr_db, f.lsd, 1);
        }
        row("mean", self.mean_snr(), self.mean_lsd(), self.file_count());
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows())
    }
}

/// One CSV holding several reports under a single header.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut s = format!("{}\n", EvalReport::CSV_HEADER);
    for r in reports {
        s.push_str(&r.csv_rows());
    }
    s
}

/// Downsamples every clip to `rate_in`, predicts at `scale * rate_in` and
/// compares with the clip resampled directly to that rate.
pub fn evaluate(testset: &[NamedSignal], predictor: &Predictor, scale: f64, config: &EvalConfig) -> Result<EvalReport> {
    if testset.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Config(format!("scale must be positive, got {scale}")));
    }
    let rate_out = scale * config.rate_in;
    let mut files = testset
        .par_iter()
        .map(|(name, clip)| {
            if clip.rate() < rate_out.max(config.rate_in) {
                return Err(Error::Config(format!("{name}: {} Hz is below the evaluation rate {rate_out}", clip.rate())));
            }
            let input = sinc_resample(clip, config.rate_in)?;
            let reference = sinc_resample(clip, rate_out)?;
            let pred = predictor.run(&input, rate_out)?;
            score_pair(name, reference.samples(), pred.samples(), &config.lsd)
        })
        .collect::<Result<Vec<_>>>()?;
    files.sort_by(|a, b| a.file.cmp(&b.file));

    let mut bytes = predictor.fingerprint();
    bytes.extend(format!("|{}|{}|{}", config.rate_in, config.lsd.fft_size, config.lsd.hop).bytes());
    Ok(EvalReport { model: predictor.id(), scale, config_hash: format!("{:016x}", fnv1a(&bytes)), files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::synth::{synth_corpus, SynthConfig};

    fn testset() -> Vec<NamedSignal> {
        synth_corpus(&SynthConfig { clips: 3, duration: 0.5, seed: 9, ..SynthConfig::default() }).unwrap()
    }

    #[test]
    fn self_comparison_is_perfect() {
        for (name, clip) in testset() {
            let r = score_pair(&name, clip.samples(), clip.samples(), &LsdConfig::default()).unwrap();
            assert_eq!(r.lsd, 0.0);
            assert_eq!(r.snr_db, f64::INFINITY);
        }
    }

    #[test]
    fn baseline_report_layout() {
        let set = testset();
        let rep = evaluate(&set, &Predictor::Baseline(BaselineMethod::Linear), 2.0, &EvalConfig::default()).unwrap();
        assert_eq!(rep.file_count(), 3);
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], EvalReport::CSV_HEADER);
        assert_eq!(lines.len(), 1 + 3 + 1);
        assert!(lines[1].starts_with("synth_0000.wav,2,linear,"));
        assert!(lines[4].starts_with("mean,2,linear,"));
        assert!(lines[4].contains(",3,"));
        // Sinc interpolation of band-limited input beats linear.
        let sinc = evaluate(&set, &Predictor::Baseline(BaselineMethod::Sinc), 2.0, &EvalConfig::default()).unwrap();
        assert!(sinc.mean_snr() > rep.mean_snr());
        assert_ne!(sinc.config_hash, rep.config_hash);
    }

    #[test]
    fn infinite_snr_renders_as_inf() {
        let rep = EvalReport {
            model: "m".into(),
            scale: 1.0,
            config_hash: "0".into(),
            files: vec![FileResult { file: "a".into(), snr_db: f64::INFINITY, lsd: 0.0 }],
        };
        assert!(rep.to_csv().contains("a,1,m,inf,0.000000,1,0"));
    }

    #[test]
    fn rejects_low_rate_clips() {
        let set = testset();
        assert!(evaluate(&set, &Predictor::Baseline(BaselineMethod::Sinc), 7.0, &EvalConfig::default()).is_err());
        assert!(evaluate(&[], &Predictor::Baseline(BaselineMethod::Sinc), 2.0, &EvalConfig::default()).is_err());
    }
}
