use rand::Rng;

use super::config::{ClassifierConfig, EncoderConfig};
use crate::augment::{apply_mask, MaskVector};
use crate::diffcore::{Param, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Parameter names and shapes, in binding order.
pub fn encoder_layout(cfg: &EncoderConfig) -> Vec<(String, Vec<usize>)> {
    let (c, h, r, k) = (cfg.in_channels, cfg.hidden_dim, cfg.repr_dim, cfg.kernel_size);
    let mut out = vec![
        ("encoder.proj.weight".to_string(), vec![c, h]),
        ("encoder.proj.bias".to_string(), vec![h]),
    ];
    for i in 0..cfg.n_blocks {
        for conv in ["conv1", "conv2"] {
            out.push((format!("encoder.block{i}.{conv}.weight"), vec![h, h, k]));
            out.push((format!("encoder.block{i}.{conv}.bias"), vec![h]));
        }
    }
    out.push(("encoder.out.weight".to_string(), vec![r, h, 1]));
    out.push(("encoder.out.bias".to_string(), vec![r]));
    out
}

pub fn classifier_layout(cfg: &ClassifierConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = vec![
        ("classifier.conv.weight".to_string(), vec![cfg.conv_channels, cfg.in_dim, 3]),
        ("classifier.conv.bias".to_string(), vec![cfg.conv_channels]),
    ];
    let mut width = cfg.conv_channels;
    for (j, &d) in cfg.fc_dims.iter().enumerate() {
        out.push((format!("classifier.fc{j}.weight"), vec![width, d]));
        out.push((format!("classifier.fc{j}.bias"), vec![d]));
        width = d;
    }
    out.push(("classifier.head.weight".to_string(), vec![width, cfg.n_classes]));
    out.push(("classifier.head.bias".to_string(), vec![cfg.n_classes]));
    out
}

/// Fan-in of a weight shape: rows of a `[in, out]` matrix or `C_in * K` of a conv kernel.
fn fan_in(shape: &[usize]) -> usize {
    match shape {
        [fan, _] => *fan,
        [_, c_in, k] => c_in * k,
        _ => 1,
    }
}

/// Uniform `1/sqrt(fan_in)` initialisation; biases share their weight's bound.
pub(crate) fn init_params<R: Rng + ?Sized>(layout: &[(String, Vec<usize>)], rng: &mut R) -> Vec<Param> {
    let mut bound = 1.0;
    layout
        .iter()
        .map(|(name, shape)| {
            if shape.len() > 1 {
                bound = 1.0 / (fan_in(shape) as f64).sqrt();
            }
            Param::new(name.clone(), Tensor::uniform(shape, bound, rng))
        })
        .collect()
}

/// Encoder bound to parameter nodes on a tape.
#[derive(Debug, Clone, Copy)]
pub struct Encoder<'a> {
    pub config: &'a EncoderConfig,
    params: &'a [Var],
}

impl<'a> Encoder<'a> {
    pub fn new(config: &'a EncoderConfig, params: &'a [Var]) -> Result<Self> {
        config.validate()?;
        let want = 4 + 4 * config.n_blocks;
        if params.len() != want {
            return Err(Error::shape("encoder params", &[want], &[params.len()]));
        }
        Ok(Encoder { config, params })
    }

    /// Per-timestamp affine map `[B, L, C] -> [B, L, hidden]`.
    pub fn project(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let s = tape.shape(x).to_vec();
        if s.len() != 3 || s[2] != self.config.in_channels {
            return Err(Error::shape("input projection", &s, &[self.config.in_channels]));
        }
        tape.linear(x, self.params[0], Some(self.params[1]))
    }

    /// `[B, L, C] -> [B, repr, L]`: projection, optional masks, residual blocks, 1x1 output conv.
    pub fn encode_channels_first(&self, tape: &mut Tape, x: Var, masks: Option<&[MaskVector]>) -> Result<Var> {
        let mut z = self.project(tape, x)?;
        if let Some(masks) = masks {
            z = apply_mask(tape, z, masks)?;
        }
        let mut h = tape.permute(z, &[0, 2, 1])?;
        for (i, &d) in self.config.dilation_schedule.iter().enumerate() {
            let p = &self.params[2 + 4 * i..6 + 4 * i];
            let inner = tape.conv1d(h, p[0], Some(p[1]), d)?;
            let inner = tape.relu(inner);
            let inner = tape.conv1d(inner, p[2], Some(p[3]), d)?;
            h = tape.add(h, inner)?;
        }
        let n = self.params.len();
        tape.conv1d(h, self.params[n - 2], Some(self.params[n - 1]), 1)
    }

    /// `[B, L, C] -> [B, L, repr]`.
    pub fn encode(&self, tape: &mut Tape, x: Var, masks: Option<&[MaskVector]>) -> Result<Var> {
        let r = self.encode_channels_first(tape, x, masks)?;
        tape.permute(r, &[0, 2, 1])
    }
}

/// Classifier head bound to parameter nodes on a tape.
#[derive(Debug, Clone, Copy)]
pub struct Classifier<'a> {
    pub config: &'a ClassifierConfig,
    params: &'a [Var],
}

impl<'a> Classifier<'a> {
    pub fn new(config: &'a ClassifierConfig, params: &'a [Var]) -> Result<Self> {
        config.validate()?;
        let want = 4 + 2 * config.fc_dims.len();
        if params.len() != want {
            return Err(Error::shape("classifier params", &[want], &[params.len()]));
        }
        Ok(Classifier { config, params })
    }

    /// `[B, repr, L] -> [B, n_classes]` logits: conv, global max over time, ReLU, FC stack.
    pub fn logits_channels_first(&self, tape: &mut Tape, r: Var) -> Result<Var> {
        let h = tape.conv1d(r, self.params[0], Some(self.params[1]), 1)?;
        let h = tape.max_over(h, 2)?;
        let mut h = tape.relu(h);
        let n_fc = self.config.fc_dims.len();
        for j in 0..n_fc {
            h = tape.linear(h, self.params[2 + 2 * j], Some(self.params[3 + 2 * j]))?;
            h = tape.relu(h);
        }
        tape.linear(h, self.params[2 + 2 * n_fc], Some(self.params[3 + 2 * n_fc]))
    }

    /// `[B, L, repr] -> [B, n_classes]` logits.
    pub fn logits(&self, tape: &mut Tape, r: Var) -> Result<Var> {
        let rc = tape.permute(r, &[0, 2, 1])?;
        self.logits_channels_first(tape, rc)
    }

    /// Class probabilities for `[B, L, repr]` representations.
    pub fn classify(&self, tape: &mut Tape, r: Var) -> Result<Var> {
        let logits = self.logits(tape, r)?;
        Ok(tape.softmax(logits))
    }
}
