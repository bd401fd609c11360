use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Encoder kernel widths, all odd.
    pub kernel_sizes: Vec<usize>,
    /// Encoder output channels per layer; the last is the latent size.
    pub channels: Vec<usize>,
    /// Decoder hidden width.
    pub hidden: usize,
    /// Number of decoder weight matrices.
    pub decoder_layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kernel_sizes: vec![7, 3, 3, 1], channels: vec![16, 32, 64, 32], hidden: 144, decoder_layers: 5 }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_sizes.is_empty() || self.kernel_sizes.len() != self.channels.len() {
            return Err(Error::Config("kernel_sizes and channels must be non-empty and equally long".into()));
        }
        if self.kernel_sizes.iter().any(|k| k % 2 == 0) {
            return Err(Error::Config("encoder kernel sizes must be odd".into()));
        }
        if self.channels.contains(&0) || self.hidden == 0 || self.decoder_layers == 0 {
            return Err(Error::Config("widths and layer counts must be positive".into()));
        }
        Ok(())
    }

    pub fn latent_dim(&self) -> usize {
        *self.channels.last().expect("validated config")
    }

    /// `k`: how many samples on each side of `t_i` influence `z_i`.
    pub fn receptive_half_width(&self) -> usize {
        self.kernel_sizes.iter().map(|k| (k - 1) / 2).sum()
    }

    /// Relative coordinate plus three latent codes.
    pub fn decoder_input_dim(&self) -> usize {
        1 + 3 * self.latent_dim()
    }

    /// `(out, in)` of every decoder matrix.
    pub fn decoder_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.decoder_layers)
            .map(|l| {
                let d_in = if l == 0 { self.decoder_input_dim() } else { self.hidden };
                let d_out = if l + 1 == self.decoder_layers { 1 } else { self.hidden };
                (d_out, d_in)
            })
            .collect()
    }

    /// `(c_out, c_in, k)` of every encoder kernel.
    pub fn encoder_shapes(&self) -> Vec<(usize, usize, usize)> {
        let mut c_in = 1;
        self.kernel_sizes
            .iter()
            .zip(&self.channels)
            .map(|(&k, &c_out)| {
                let s = (c_out, c_in, k);
                c_in = c_out;
                s
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
