use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassifierConfig, EncoderConfig};

/// Which objective drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Hierarchical contrastive loss plus cross-entropy, optimised together.
    Joint,
    /// Cross-entropy only, encoder and classifier trained end to end.
    ClassifierOnly,
    /// Contrastive pre-training of the encoder, then a classifier on the frozen encoder.
    TwoStep,
}

impl TrainMode {
    pub const ALL: [TrainMode; 3] = [TrainMode::Joint, TrainMode::TwoStep, TrainMode::ClassifierOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Joint => "joint",
            TrainMode::ClassifierOnly => "classifier_only",
            TrainMode::TwoStep => "two_step",
        }
    }
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(TrainMode::Joint),
            "classifier_only" => Ok(TrainMode::ClassifierOnly),
            "two_step" => Ok(TrainMode::TwoStep),
            other => Err(Error::config(format!(
                "unknown mode {other:?}; expected joint, classifier_only or two_step"
            ))),
        }
    }
}

/// Network widths; the input channel count comes from the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelDims {
    pub hidden_dim: usize,
    pub repr_dim: usize,
    pub n_blocks: usize,
    pub conv_channels: usize,
    pub fc_dims: Vec<usize>,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            hidden_dim: 128,
            repr_dim: 900,
            n_blocks: 5,
            conv_channels: 256,
            fc_dims: vec![64],
        }
    }
}

impl ModelDims {
    pub fn encoder(&self, in_channels: usize) -> EncoderConfig {
        EncoderConfig::with_dims(in_channels, self.hidden_dim, self.repr_dim, self.n_blocks)
    }

    pub fn classifier(&self) -> ClassifierConfig {
        ClassifierConfig {
            conv_channels: self.conv_channels,
            fc_dims: self.fc_dims.clone(),
            ..ClassifierConfig::new(self.repr_dim)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub k_folds: usize,
    pub lambda_class: f64,
    pub mask_p: f64,
    pub seed: u64,
    pub mode: TrainMode,
    pub symmetrize: bool,
    pub contiguous_folds: bool,
    pub dims: ModelDims,
    /// Worker threads for independent folds; results do not depend on it.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            lr: 0.001,
            batch_size: 32,
            k_folds: 5,
            lambda_class: 1.0,
            mask_p: 0.5,
            seed: 0,
            mode: TrainMode::Joint,
            symmetrize: false,
            contiguous_folds: false,
            dims: ModelDims::default(),
            jobs: 1,
        }
    }
}

impl TrainConfig {
    /// Desk-scale preset: hidden 32, repr 64, 3 blocks, 30 epochs, classifier conv 64.
    pub fn small() -> Self {
        TrainConfig {
            epochs: 30,
            seed: 7,
            dims: ModelDims {
                hidden_dim: 32,
                repr_dim: 64,
                n_blocks: 3,
                conv_channels: 64,
                fc_dims: vec![64],
            },
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch_size < 1 || self.jobs < 1 {
            return Err(Error::config("epochs, batch_size and jobs must all be >= 1"));
        }
        if self.k_folds < 2 {
            return Err(Error::config(format!("k_folds must be >= 2, got {}", self.k_folds)));
        }
        if self.mode != TrainMode::ClassifierOnly && self.batch_size < 2 {
            return Err(Error::config(format!(
                "{} mode needs batch_size >= 2 for instance-wise contrast",
                self.mode
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(0.0..=1.0).contains(&self.mask_p) {
            return Err(Error::config(format!("mask probability {} outside [0, 1]", self.mask_p)));
        }
        if !(self.lambda_class >= 0.0) {
            return Err(Error::config("lambda_class must be >= 0"));
        }
        if self.mode == TrainMode::TwoStep && self.epochs < 2 {
            return Err(Error::config("two_step mode needs at least 2 epochs"));
        }
        self.dims.encoder(1).validate()?;
        self.dims.classifier().validate()
    }
}
