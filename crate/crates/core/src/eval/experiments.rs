use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::audio_io::AudioSignal;
use crate::error::{Error, Result};
use crate::model::ModelWeights;
use crate::training::{fit_with, EpochStats, Selection, TrainConfig};

use super::corpus::NamedSignal;
use super::report::{evaluate, EvalConfig, EvalReport, Predictor};

/// Evaluates one predictor at each scale, in order.
pub fn sweep_scales(
    predictor: &Predictor,
    testset: &[NamedSignal],
    scales: &[f64],
    config: &EvalConfig,
) -> Result<Vec<EvalReport>> {
    scales.iter().map(|&s| evaluate(testset, predictor, s, config)).collect()
}

/// Training-recipe variants compared by [`ablate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    /// No stochastic selection (`delta = 0`).
    NoSto,
    /// No spectral loss (`lambda = 0`).
    NoSpec,
    /// Local-ensemble blending instead of stochastic selection.
    Ensemble,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::NoSto => "-sto",
            Self::NoSpec => "-spec",
            Self::Ensemble => "ensemble",
        }
    }

    pub fn apply(self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        match self {
            Self::Full => {}
            Self::NoSto => cfg.task.delta = Some(0.0),
            Self::NoSpec => cfg.task.lambda = 0.0,
            Self::Ensemble => cfg.selection = Selection::Ensemble,
        }
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Full, Self::NoSto, Self::NoSpec, Self::Ensemble]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?} (full, -sto, -spec, ensemble)")))
    }
}

/// One trained variant and its held-out report.
#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: Variant,
    pub weights: ModelWeights<f32>,
    pub report: EvalReport,
}

impl AblationRow {
    pub const CSV_HEADER: &'static str = "variant,snr_db,lsd,delta_snr_db,delta_lsd";

    /// Comparison table; deltas are relative to the `full` row when
    /// present, otherwise to the first row.
    pub fn table_csv(rows: &[AblationRow]) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        let Some(base) = rows.iter().find(|r| r.variant == Variant::Full).or(rows.first()) else {
            return s;
        };
        let (bs, bl) = (base.report.mean_snr(), base.report.mean_lsd());
        for r in rows {
            let (snr, lsd) = (r.report.mean_snr(), r.report.mean_lsd());
            let _ = writeln!(s, "{},{snr:.6},{lsd:.6},{:.6},{:.6}", r.variant, snr - bs, lsd - bl);
        }
        s
    }
}

/// Trains every variant from the same seed and corpus and evaluates each
/// on `testset` at `scale`.
pub fn ablate(
    corpus: &[AudioSignal],
    base: &TrainConfig,
    variants: &[Variant],
    testset: &[NamedSignal],
    scale: f64,
    config: &EvalConfig,
    mut on_epoch: impl FnMut(Variant, &EpochStats),
) -> Result<Vec<AblationRow>> {
    variants
        .iter()
        .map(|&variant| {
            let cfg = variant.apply(base);
            let (weights, _) = fit_with(corpus, &cfg, None, |e| on_epoch(variant, e))?;
            let id = variant.name();
            let report = evaluate(testset, &Predictor::Model { weights: &weights, id }, scale, config)?;
            Ok(AblationRow { variant, weights, report })
        })
        .collect()
}
