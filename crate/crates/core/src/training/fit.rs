use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio_io::AudioSignal;
use crate::autodiff::{clip_grad_norm, AdamState, Tape, Tensor};
use crate::error::{Error, Result};
use crate::model::{params_on_tape, ModelConfig, ModelWeights};
use crate::rng::derive_rng;

use super::loss::{PreparedSpectralLoss, SpectralLossConfig};
use super::selection::{ensemble_forward, task_forward};
use super::task::{sample_task, TaskSpec, TrainTask};

/// How target coordinates pick their latent codes during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Nearest code after Gaussian jitter of the query time.
    #[default]
    Stochastic,
    /// Distance-weighted blend of the two flanking predictions.
    Ensemble,
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub selection: Selection,
    pub task: TaskSpec,
    pub model: ModelConfig,
    pub spectral: SpectralLossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 50,
            learning_rate: 0.001,
            decay_every: 5,
            decay_factor: 0.5,
            clip_norm: 0.001,
            batch_size: 16,
            selection: Selection::Stochastic,
            task: TaskSpec::default(),
            model: ModelConfig::default(),
            spectral: SpectralLossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.model.validate()?;
        self.spectral.validate()?;
        if self.batch_size == 0 || self.decay_every == 0 {
            return Err(Error::Config("batch_size and decay_every must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.clip_norm > 0.0 && self.decay_factor > 0.0) {
            return Err(Error::Config("learning_rate, clip_norm and decay_factor must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("train config serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `learning_rate * decay_factor ^ floor(epoch / decay_every)`.
pub fn learning_rate_at(cfg: &TrainConfig, epoch: usize) -> f64 {
    cfg.learning_rate * cfg.decay_factor.powi((epoch / cfg.decay_every) as i32)
}

/// Mean losses over one epoch's tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub wave_loss: f64,
    pub spec_loss: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,lr,wave_loss,spec_loss,total";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for e in &self.epochs {
            let _ = writeln!(s, "{},{:e},{:.9},{:.9},{:.9}", e.epoch, e.lr, e.wave_loss, e.spec_loss, e.total);
        }
        s
    }
}

struct TaskOutcome {
    grads: Vec<Tensor<f32>>,
    wave: f64,
    spec: f64,
    total: f64,
}

fn pad_to(tape: &mut Tape<f32>, v: crate::autodiff::Var, len: usize) -> Result<crate::autodiff::Var> {
    let have = tape.value(v).len();
    if have >= len {
        return Ok(v);
    }
    let zeros = tape.constant(Tensor::zeros(vec![len - have]));
    tape.concat(&[v, zeros])
}

fn task_gradients(
    weights: &ModelWeights<f32>,
    task: &TrainTask,
    cfg: &TrainConfig,
    loss: &PreparedSpectralLoss<f32>,
    rng: &mut impl rand::Rng,
) -> Result<TaskOutcome> {
    let mut tape = Tape::new();
    let params = params_on_tape(&mut tape, weights);
    let pred = match cfg.selection {
        Selection::Stochastic => task_forward(&mut tape, &params, weights.config(), task, cfg.task.delta(), rng)?,
        Selection::Ensemble => ensemble_forward(&mut tape, &params, weights.config(), task)?,
    };
    let amps: Vec<f32> = task.target_amps.iter().map(|&v| v as f32).collect();
    let target = tape.constant(Tensor::vector(amps));
    // Short targets are zero-padded up to the largest STFT window; the
    // waveform term only sees the real samples.
    let wave = tape.l1_loss(target, pred)?;
    let (total, spec) = if cfg.task.lambda == 0.0 {
        (wave, None)
    } else {
        let need = loss.config().max_window();
        let t = pad_to(&mut tape, target, need)?;
        let p = pad_to(&mut tape, pred, need)?;
        let spec = loss.spec_on_tape(&mut tape, t, p)?;
        let weighted = tape.scale(spec, cfg.task.lambda as f32);
        (tape.add(wave, weighted)?, Some(spec))
    };
    let total_v = tape.value(total).item() as f64;
    let wave_v = tape.value(wave).item() as f64;
    let spec_v = spec.map_or(0.0, |s| tape.value(s).item() as f64);
    if !total_v.is_finite() {
        return Ok(TaskOutcome { grads: Vec::new(), wave: wave_v, spec: spec_v, total: total_v });
    }
    let g = tape.backward(total)?;
    let grads = params.iter().map(|&p| g.get_or_zeros(p)).collect();
    Ok(TaskOutcome { grads, wave: wave_v, spec: spec_v, total: total_v })
}

/// Trains from a fresh initialization seeded by `cfg.seed`.
pub fn fit(corpus: &[AudioSignal], cfg: &TrainConfig) -> Result<(ModelWeights<f32>, History)> {
    fit_with(corpus, cfg, None, |_| {})
}

/// [`fit`] with optional starting weights and a per-epoch callback.
pub fn fit_with(
    corpus: &[AudioSignal],
    cfg: &TrainConfig,
    init: Option<ModelWeights<f32>>,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ModelWeights<f32>, History)> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut weights = match init {
        Some(w) if *w.config() != cfg.model => {
            return Err(Error::Config("initial weights do not match the model config".into()))
        }
        Some(w) => w,
        None => ModelWeights::init(cfg.model.clone(), cfg.seed)?,
    };
    let loss = PreparedSpectralLoss::<f32>::new(&cfg.spectral)?;
    let mut adam = AdamState::new(weights.params());
    let mut history = History::default();

    for epoch in 0..cfg.epochs {
        let lr = learning_rate_at(cfg, epoch);
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        order.shuffle(&mut derive_rng(cfg.seed, &[1, epoch as u64]));
        let (mut wave, mut spec, mut total) = (0.0, 0.0, 0.0);
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let outcomes: Vec<Result<TaskOutcome>> = batch
                .par_iter()
                .map(|&ci| {
                    let mut rng = derive_rng(cfg.seed, &[2, epoch as u64, ci as u64]);
                    let task = sample_task(&corpus[ci], &cfg.task, &mut rng)?;
                    task_gradients(&weights, &task, cfg, &loss, &mut rng)
                })
                .collect();
            let mut sum: Option<Vec<Tensor<f32>>> = None;
            for out in outcomes {
                let out = out?;
                if !out.total.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, step, wave: out.wave, spec: out.spec });
                }
                wave += out.wave;
                spec += out.spec;
                total += out.total;
                match &mut sum {
                    None => sum = Some(out.grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&out.grads) {
                            a.data_mut().iter_mut().zip(g.data()).for_each(|(x, &y)| *x += y);
                        }
                    }
                }
            }
            let mut grads = sum.expect("non-empty batch");
            let inv = 1.0 / batch.len() as f32;
            grads.iter_mut().for_each(|g| g.data_mut().iter_mut().for_each(|v| *v *= inv));
            clip_grad_norm(&mut grads, cfg.clip_norm);
            adam.step(weights.params_mut(), &grads, lr)?;
        }
        let n = corpus.len() as f64;
        let stats = EpochStats { epoch, lr, wave_loss: wave / n, spec_loss: spec / n, total: total / n };
        on_epoch(&stats);
        history.epochs.push(stats);
    }
    Ok((weights, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::gradcheck::grad_check_sampled;
    use crate::training::loss::StftScale;
    use rand::Rng;

    fn synth_clip(seed: u64, n: usize) -> AudioSignal {
        let mut rng = derive_rng(seed, &[]);
        let parts: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.random_range(100.0..3000.0), rng.random_range(0.05..0.3), rng.random_range(0.0..6.28)))
            .collect();
        let s = (0..n)
            .map(|i| {
                let t = i as f64 / 48000.0;
                parts.iter().map(|&(f, a, p)| a * (2.0 * std::f64::consts::PI * f * t + p).sin()).sum()
            })
            .collect();
        AudioSignal::new(s, 48000.0).unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 5,
            learning_rate: 0.003,
            model: ModelConfig { hidden: 32, ..ModelConfig::default() },
            task: TaskSpec { clip_length: 0.05, ..TaskSpec::default() },
            spectral: SpectralLossConfig {
                scales: vec![
                    StftScale { fft_size: 128, hop: 32, window_length: 128 },
                    StftScale { fft_size: 256, hop: 64, window_length: 256 },
                ],
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learning_rate_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(learning_rate_at(&cfg, 0), 0.001);
        assert_eq!(learning_rate_at(&cfg, 4), 0.001);
        assert_eq!(learning_rate_at(&cfg, 5), 0.0005);
        assert_eq!(learning_rate_at(&cfg, 49), 0.001 * 0.5f64.powi(9));
        for e in 0..50 {
            assert_eq!(learning_rate_at(&cfg, e), 0.001 / f64::from(1u32 << (e / 5)));
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = TrainConfig { seed: 7, selection: Selection::Ensemble, ..TrainConfig::default() };
        let back = TrainConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial = TrainConfig::from_toml("epochs = 3\n[task]\nlambda = 0.0\n").unwrap();
        assert_eq!(partial.epochs, 3);
        assert_eq!(partial.task.lambda, 0.0);
        assert_eq!(partial.task.r_in, 8000.0);
        assert!(TrainConfig::from_toml("batch_size = 0").is_err());
    }

    #[test]
    fn five_epochs_reduce_the_loss() {
        let corpus: Vec<AudioSignal> = (0..64).map(|s| synth_clip(s, 2400)).collect();
        let (_, h) = fit(&corpus, &small_config()).unwrap();
        assert_eq!(h.epochs.len(), 5);
        let (first, last) = (h.epochs[0].total, h.epochs[4].total);
        assert!(last < first, "{first} -> {last}");
        assert!(h.to_csv().starts_with("epoch,lr,wave_loss,spec_loss,total\n0,3e-3"));
    }

    #[test]
    fn training_is_deterministic() {
        let corpus: Vec<AudioSignal> = (0..20).map(|s| synth_clip(s + 100, 2400)).collect();
        let cfg = TrainConfig { epochs: 2, ..small_config() };
        let (a, ha) = fit(&corpus, &cfg).unwrap();
        let (b, hb) = fit(&corpus, &cfg).unwrap();
        assert_eq!(a.to_checkpoint().to_bytes(), b.to_checkpoint().to_bytes());
        assert_eq!(ha, hb);
    }

    #[test]
    fn ensemble_variant_trains() {
        let corpus: Vec<AudioSignal> = (0..8).map(|s| synth_clip(s, 2400)).collect();
        let cfg = TrainConfig { epochs: 1, selection: Selection::Ensemble, ..small_config() };
        let (_, h) = fit(&corpus, &cfg).unwrap();
        assert!(h.epochs[0].total.is_finite());
    }

    #[test]
    fn non_finite_loss_aborts() {
        let corpus: Vec<AudioSignal> = (0..4).map(|s| synth_clip(s, 2400)).collect();
        let cfg = TrainConfig { epochs: 1, ..small_config() };
        let mut w = ModelWeights::<f32>::init(cfg.model.clone(), 0).unwrap();
        let last = w.params().len() - 1;
        w.params_mut()[last].data_mut()[0] = f32::INFINITY;
        let err = fit_with(&corpus, &cfg, Some(w), |_| {}).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { epoch: 0, step: 0, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit(&[], &small_config()), Err(Error::EmptyInput)));
        let short = vec![synth_clip(0, 100)];
        assert!(matches!(fit(&short, &small_config()), Err(Error::TooShort { .. })));
    }

    /// End-to-end gradient of the training loss with deterministic
    /// selection, on a narrow decoder so every coordinate can be probed.
    #[test]
    fn full_loss_gradient_matches_finite_differences() {
        let model = ModelConfig { hidden: 6, ..ModelConfig::default() };
        let weights = ModelWeights::<f64>::init(model.clone(), 3).unwrap();
        let input = AudioSignal::new((0..24).map(|i| (i as f64 * 0.7).sin() * 0.5).collect(), 8000.0).unwrap();
        let coords: Vec<f64> = (0..40).map(|j| j as f64 / 13_000.0).collect();
        let amps: Vec<f64> = coords.iter().map(|t| (t * 5000.0).sin() * 0.4).collect();
        let task = TrainTask { input, target_rate: 13_000.0, target_coords: coords, target_amps: amps.clone() };
        let spectral = SpectralLossConfig {
            scales: vec![
                StftScale { fft_size: 16, hop: 4, window_length: 16 },
                StftScale { fft_size: 32, hop: 8, window_length: 32 },
            ],
        };
        let loss = PreparedSpectralLoss::<f64>::new(&spectral).unwrap();
        let err = grad_check_sampled(
            |tape, vars| {
                let pred = task_forward(tape, vars, &model, &task, 0.0, &mut derive_rng(0, &[]))?;
                let target = tape.constant(Tensor::vector(amps.clone()));
                Ok(loss.total_on_tape(tape, target, pred, 1.0)?.total)
            },
            weights.params(),
            1e-6,
            60,
            11,
        )
        .unwrap();
        assert!(err < 1e-3, "{err}");
    }
}
