use std::path::Path;

use rand::Rng;

use super::ModelConfig;
use crate::autodiff::checkpoint::Checkpoint;
use crate::autodiff::{Real, Tensor};
use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// Encoder and decoder parameters for a fixed [`ModelConfig`].
///
/// Tensors are stored as `[encoder.0.weight, encoder.0.bias, ...,
/// decoder.0.weight, decoder.0.bias, ...]`. Convolution kernels are
/// `[c_out, c_in, k]`, dense matrices `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights<T = f32> {
    config: ModelConfig,
    params: Vec<Tensor<T>>,
}

impl<T: Real> ModelWeights<T> {
    /// Uniform fan-in initialization: `sqrt(6 / fan_in)` bounds ahead of a
    /// rectifier, `sqrt(3 / fan_in)` on the final linear layers, biases in
    /// `1 / sqrt(fan_in)`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = derive_rng(seed, &[0x1417]);
        let mut params = Vec::new();
        let mut layer = |shape: Vec<usize>, fan_in: usize, last: bool, params: &mut Vec<Tensor<T>>| {
            let gain = if last { 3.0 } else { 6.0 };
            let wb = (gain / fan_in as f64).sqrt();
            let bb = 1.0 / (fan_in as f64).sqrt();
            let n: usize = shape.iter().product();
            let w = (0..n).map(|_| T::of(rng.random_range(-wb..wb))).collect();
            let b = (0..shape[0]).map(|_| T::of(rng.random_range(-bb..bb))).collect();
            params.push(Tensor::new(shape.clone(), w).expect("init shape"));
            params.push(Tensor::vector(b));
        };
        let enc = config.encoder_shapes();
        for (l, &(c_out, c_in, k)) in enc.iter().enumerate() {
            layer(vec![c_out, c_in, k], c_in * k, l + 1 == enc.len(), &mut params);
        }
        let dec = config.decoder_shapes();
        for (l, &(d_out, d_in)) in dec.iter().enumerate() {
            layer(vec![d_out, d_in], d_in, l + 1 == dec.len(), &mut params);
        }
        Ok(Self { config, params })
    }

    /// Builds weights from tensors in canonical order, checking shapes.
    pub fn from_params(config: ModelConfig, params: Vec<Tensor<T>>) -> Result<Self> {
        config.validate()?;
        let expected = Self::expected_shapes(&config);
        if params.len() != expected.len() {
            return Err(Error::Shape(format!("expected {} tensors, got {}", expected.len(), params.len())));
        }
        for ((name, shape), p) in expected.iter().zip(&params) {
            if p.shape() != &shape[..] {
                return Err(Error::Shape(format!("{name}: expected {shape:?}, got {:?}", p.shape())));
            }
        }
        Ok(Self { config, params })
    }

    fn expected_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
        let mut v = Vec::new();
        for (l, (c_out, c_in, k)) in config.encoder_shapes().into_iter().enumerate() {
            v.push((format!("encoder.{l}.weight"), vec![c_out, c_in, k]));
            v.push((format!("encoder.{l}.bias"), vec![c_out]));
        }
        for (l, (d_out, d_in)) in config.decoder_shapes().into_iter().enumerate() {
            v.push((format!("decoder.{l}.weight"), vec![d_out, d_in]));
            v.push((format!("decoder.{l}.bias"), vec![d_out]));
        }
        v
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn param_names(&self) -> Vec<String> {
        Self::expected_shapes(&self.config).into_iter().map(|(n, _)| n).collect()
    }

    pub fn encoder_layer(&self, l: usize) -> (&Tensor<T>, &Tensor<T>) {
        (&self.params[2 * l], &self.params[2 * l + 1])
    }

    pub fn decoder_layer(&self, l: usize) -> (&Tensor<T>, &Tensor<T>) {
        let o = 2 * self.config.kernel_sizes.len();
        (&self.params[o + 2 * l], &self.params[o + 2 * l + 1])
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn encoder_parameter_count(&self) -> usize {
        self.params[..2 * self.config.kernel_sizes.len()].iter().map(Tensor::len).sum()
    }

    pub fn cast<U: Real>(&self) -> ModelWeights<U> {
        ModelWeights { config: self.config.clone(), params: self.params.iter().map(Tensor::cast).collect() }
    }
}

impl ModelWeights<f32> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.to_toml(),
            tensors: self.param_names().into_iter().zip(self.params.iter().cloned()).collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let config = ModelConfig::from_toml(&ckpt.config)?;
        let expected = Self::expected_shapes(&config);
        if ckpt.tensors.len() != expected.len() {
            return Err(Error::Checkpoint(format!("expected {} tensors, found {}", expected.len(), ckpt.tensors.len())));
        }
        let mut params = Vec::with_capacity(expected.len());
        for ((name, _), (found, t)) in expected.iter().zip(&ckpt.tensors) {
            if name != found {
                return Err(Error::Checkpoint(format!("expected tensor {name}, found {found}")));
            }
            params.push(t.clone());
        }
        Self::from_params(config, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
