//! Small reverse-mode differentiation engine covering the operations the
//! encoder, decoder and losses need, plus Adam and global-norm clipping.
//!
//! Forward arithmetic for convolution and affine layers lives in [`kernels`]
//! and is shared with the inference path, so a value computed on a [`Tape`]
//! is bit-identical to the same value computed without one.

pub mod checkpoint;
pub mod gradcheck;
pub mod kernels;
mod optim;
mod tape;
mod tensor;

pub use gradcheck::grad_check;
pub use optim::{clip_grad_norm, global_norm, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use tape::{DftBasis, Gradients, Tape, Var, MAG_FLOOR};
pub use tensor::{Real, Tensor};
