use serde::{Deserialize, Serialize};

use crate::data::N_CLASSES;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub in_channels: usize,
    pub hidden_dim: usize,
    pub repr_dim: usize,
    pub n_blocks: usize,
    pub kernel_size: usize,
    pub dilation_schedule: Vec<usize>,
}

impl EncoderConfig {
    /// 128 hidden, 900 output, five blocks dilated 1, 2, 4, 8, 16.
    pub fn new(in_channels: usize) -> Self {
        EncoderConfig::with_dims(in_channels, 128, 900, 5)
    }

    /// Kernel 3 with dilation `2^i` in block `i`.
    pub fn with_dims(in_channels: usize, hidden_dim: usize, repr_dim: usize, n_blocks: usize) -> Self {
        EncoderConfig {
            in_channels,
            hidden_dim,
            repr_dim,
            n_blocks,
            kernel_size: 3,
            dilation_schedule: (0..n_blocks).map(|i| 1 << i).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.hidden_dim == 0 || self.repr_dim == 0 {
            return Err(Error::config("encoder dimensions must be positive"));
        }
        if self.n_blocks != self.dilation_schedule.len() {
            return Err(Error::config(format!(
                "{} blocks but {} dilations",
                self.n_blocks,
                self.dilation_schedule.len()
            )));
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::config("encoder kernel size must be odd"));
        }
        if self.dilation_schedule.contains(&0) {
            return Err(Error::config("dilations must be >= 1"));
        }
        Ok(())
    }

    /// Timestamps of input that can influence one output: two convolutions per block.
    pub fn receptive_field(&self) -> usize {
        1 + 2 * (self.kernel_size - 1) * self.dilation_schedule.iter().sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub in_dim: usize,
    pub conv_channels: usize,
    pub fc_dims: Vec<usize>,
    pub n_classes: usize,
}

impl ClassifierConfig {
    /// Conv 256, one hidden FC of 64, three classes.
    pub fn new(in_dim: usize) -> Self {
        ClassifierConfig {
            in_dim,
            conv_channels: 256,
            fc_dims: vec![64],
            n_classes: N_CLASSES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.conv_channels == 0 || self.fc_dims.contains(&0) {
            return Err(Error::config("classifier dimensions must be positive"));
        }
        if self.n_classes != N_CLASSES {
            return Err(Error::config(format!(
                "classifier must have {N_CLASSES} classes, got {}",
                self.n_classes
            )));
        }
        Ok(())
    }
}
