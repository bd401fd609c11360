//! Self-supervised task generation, stochastic latent selection, losses and
//! the optimization loop.

mod fit;
mod loss;
mod selection;
mod task;

pub use fit::{fit, fit_with, learning_rate_at, EpochStats, History, Selection, TrainConfig};
pub use loss::{spec_loss, total_loss, LossTerms, PreparedSpectralLoss, SpectralLossConfig, StftScale};
pub use selection::{
    ensemble_forward, ensemble_predict, perturbed_index, perturbed_predict, select_centers, task_forward, SelectedContext,
};
pub(crate) use loss::hann;
pub use task::{sample_task, TaskSpec, TrainTask};
