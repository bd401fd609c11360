//! Local implicit neural representation for audio super-resolution at
//! arbitrary (including non-integer) scale.
//!
//! A convolutional encoder turns low-rate audio into one latent code per input
//! sample; an MLP decoder maps a continuous time coordinate plus the three
//! nearest codes to an amplitude. The pair is trained self-supervised on
//! randomly drawn output resolutions and can be queried at any rate, offline
//! or through a low-latency streaming session.

pub mod audio_io;
pub mod autodiff;
pub mod error;
pub mod eval;
pub mod inference;
pub mod model;
pub mod rng;
pub mod training;

pub use audio_io::{nearest_index, read_wav, sinc_resample, write_wav, AudioSignal, BitDepth, CoordinateGrid};
pub use error::{Error, Result};
pub use inference::{upsample, StreamSession};
pub use model::{ModelConfig, ModelWeights};
