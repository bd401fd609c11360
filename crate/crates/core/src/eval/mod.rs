//! Metrics, classical baselines, evaluation reports and the experiment
//! drivers behind the command-line tool.

mod baseline;
mod corpus;
mod experiments;
mod metrics;
mod report;
mod spectrogram;
mod synth;

pub use baseline::{baseline_upsample, BaselineMethod};
pub use corpus::{align_lengths, load_dir, NamedSignal};
pub use experiments::{ablate, sweep_scales, AblationRow, Variant};
pub use metrics::{log_power_spectrogram, lsd, snr, spearman, LsdConfig};
pub use report::{evaluate, reports_to_csv, score_pair, EvalConfig, EvalReport, FileResult, Predictor};
pub use spectrogram::spectrogram_dump;
pub use synth::{synth_clip, synth_corpus, SynthConfig};
