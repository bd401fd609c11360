use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use lisa::eval::{
    ablate, evaluate, load_dir, reports_to_csv, spectrogram_dump, sweep_scales, synth_corpus, AblationRow,
    BaselineMethod, EvalConfig, LsdConfig, NamedSignal, Predictor, SynthConfig, Variant,
};
use lisa::training::{fit_with, TrainConfig};
use lisa::{read_wav, sinc_resample, upsample, write_wav, AudioSignal, BitDepth, ModelWeights, StreamSession};

#[derive(Parser)]
#[command(name = "lisa", version, about = "Arbitrary-scale audio super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a directory of WAV files.
    Train {
        /// TOML training configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the per-epoch loss history here as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Start from these weights instead of a fresh initialization.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Super-resolve one file to a new sample rate.
    Upsample {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Output rate in Hz.
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        out: PathBuf,
        /// Run through a streaming session instead of whole-file inference.
        #[arg(long)]
        stream: bool,
        /// Samples per push in streaming mode.
        #[arg(long, default_value_t = 256, requires = "stream")]
        chunk: usize,
        /// Write 32-bit float instead of 16-bit PCM.
        #[arg(long)]
        float: bool,
    },
    /// Score a model (or a baseline) on a test directory at one scale.
    Eval {
        /// Checkpoint; required unless --baseline is given.
        #[arg(long, required_unless_present = "baseline")]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 8000.0)]
        rate_in: f64,
        /// sinc, zero-hold or linear.
        #[arg(long, conflicts_with = "ckpt")]
        baseline: Option<BaselineMethod>,
    },
    /// Score a model at several scales.
    Sweep {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated scales.
        #[arg(long, value_delimiter = ',', default_value = "1.25,1.5,2,2.5,3,4,5,6")]
        scales: Vec<f64>,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 8000.0)]
        rate_in: f64,
    },
    /// Train recipe variants from the same seed and compare them.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Held-out test directory.
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated variants: full, -sto, -spec, ensemble.
        #[arg(long, value_delimiter = ',', default_value = "full,-sto,-spec", allow_hyphen_values = true)]
        variants: Vec<Variant>,
        #[arg(long, default_value_t = 2.0)]
        scale: f64,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 8000.0)]
        rate_in: f64,
        /// Save each variant's weights as <dir>/<variant>.ckpt.
        #[arg(long)]
        save_dir: Option<PathBuf>,
    },
    /// Write a log-power spectrogram as PNG or CSV.
    SpecDump {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output path ending in .png or .csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the synthetic sinusoid corpus as WAV files.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        clips: usize,
        #[arg(long, default_value_t = 0.25)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, data, out, history, init } => {
            let cfg = load_config(config.as_deref())?;
            let corpus = training_corpus(&data, cfg.task.r_data)?;
            let init = init.map(|p| load_weights(&p)).transpose()?;
            let (weights, hist) = fit_with(&corpus, &cfg, init, |e| {
                eprintln!(
                    "epoch {:>3}  lr {:.3e}  wave {:.5}  spec {:.5}  total {:.5}",
                    e.epoch, e.lr, e.wave_loss, e.spec_loss, e.total
                );
            })?;
            weights.save(&out).with_context(|| format!("saving {}", out.display()))?;
            if let Some(path) = history {
                write_text(&path, &hist.to_csv())?;
            }
            eprintln!("saved {} ({} parameters)", out.display(), weights.parameter_count());
        }
        Command::Upsample { ckpt, input, rate, out, stream, chunk, float } => {
            let weights = load_weights(&ckpt)?;
            let signal = read_wav(&input)?;
            let result = if stream {
                stream_file(weights, &signal, rate, chunk)?
            } else {
                upsample(&signal, &weights, rate)?
            };
            let depth = if float { BitDepth::Float32 } else { BitDepth::Pcm16 };
            write_wav(&result, &out, depth)?;
        }
        Command::Eval { ckpt, data, scale, report, rate_in, baseline } => {
            let testset = load_dir(&data)?;
            let cfg = EvalConfig { rate_in, ..EvalConfig::default() };
            let rep = match baseline {
                Some(m) => evaluate(&testset, &Predictor::Baseline(m), scale, &cfg)?,
                None => {
                    let path = ckpt.expect("clap enforces --ckpt");
                    let weights = load_weights(&path)?;
                    let id = model_id(&path);
                    evaluate(&testset, &Predictor::Model { weights: &weights, id: &id }, scale, &cfg)?
                }
            };
            write_text(&report, &rep.to_csv())?;
            eprintln!("x{scale}: snr {:.3} dB, lsd {:.4} over {} files", rep.mean_snr(), rep.mean_lsd(), rep.file_count());
        }
        Command::Sweep { ckpt, data, scales, report, rate_in } => {
            let testset = load_dir(&data)?;
            let weights = load_weights(&ckpt)?;
            let id = model_id(&ckpt);
            let cfg = EvalConfig { rate_in, ..EvalConfig::default() };
            let reports = sweep_scales(&Predictor::Model { weights: &weights, id: &id }, &testset, &scales, &cfg)?;
            for r in &reports {
                eprintln!("x{}: snr {:.3} dB, lsd {:.4}", r.scale, r.mean_snr(), r.mean_lsd());
            }
            write_text(&report, &reports_to_csv(&reports))?;
        }
        Command::Ablate { config, data, test, variants, scale, report, rate_in, save_dir } => {
            if variants.is_empty() {
                bail!("no variants given");
            }
            let base = load_config(config.as_deref())?;
            let corpus = training_corpus(&data, base.task.r_data)?;
            let testset = load_dir(&test)?;
            let cfg = EvalConfig { rate_in, ..EvalConfig::default() };
            let rows = ablate(&corpus, &base, &variants, &testset, scale, &cfg, |v, e| {
                eprintln!("[{v}] epoch {:>3}  total {:.5}", e.epoch, e.total);
            })?;
            if let Some(dir) = save_dir {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for row in &rows {
                    row.weights.save(dir.join(format!("{}.ckpt", row.variant)))?;
                }
            }
            write_text(&report, &AblationRow::table_csv(&rows))?;
        }
        Command::SpecDump { input, out } => {
            let signal = read_wav(&input)?;
            spectrogram_dump(&signal, &LsdConfig::default(), &out)?;
        }
        Command::Synth { out, clips, duration, seed } => {
            let cfg = SynthConfig { seed, clips, duration, ..SynthConfig::default() };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (name, clip) in synth_corpus(&cfg)? {
                write_wav(&clip, out.join(name), BitDepth::Float32)?;
            }
        }
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<TrainConfig> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            TrainConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_weights(path: &Path) -> Result<ModelWeights<f32>> {
    ModelWeights::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

/// Clips resampled to the corpus rate the task sampler expects.
fn training_corpus(dir: &Path, rate: f64) -> Result<Vec<AudioSignal>> {
    let clips: Vec<NamedSignal> = load_dir(dir)?;
    clips
        .into_iter()
        .map(|(name, s)| {
            if s.rate() == rate {
                Ok(s)
            } else {
                sinc_resample(&s, rate).with_context(|| format!("resampling {name}"))
            }
        })
        .collect()
}

fn stream_file(weights: ModelWeights<f32>, signal: &AudioSignal, rate: f64, chunk: usize) -> Result<AudioSignal> {
    if chunk == 0 {
        bail!("--chunk must be positive");
    }
    let mut session = StreamSession::new(Arc::new(weights), signal.rate(), rate)?;
    let mut out = Vec::new();
    for piece in signal.samples().chunks(chunk) {
        out.extend(session.push(piece)?);
    }
    out.extend(session.close()?);
    Ok(AudioSignal::new(out.into_iter().map(f64::from).collect(), rate)?)
}

fn model_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
