use rand::Rng;

use super::config::{ClassifierConfig, EncoderConfig};
use super::network::{classifier_layout, encoder_layout, init_params, Classifier, Encoder};
use crate::diffcore::{Param, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Encoder plus classifier parameters, stored at `f32` precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub encoder: EncoderConfig,
    pub classifier: ClassifierConfig,
    params: Vec<Param>,
    n_encoder: usize,
}

/// Parameter nodes of one model on one tape.
#[derive(Debug, Clone)]
pub struct BoundModel {
    pub encoder: Vec<Var>,
    pub classifier: Vec<Var>,
}

impl Model {
    pub fn new<R: Rng + ?Sized>(encoder: EncoderConfig, classifier: ClassifierConfig, rng: &mut R) -> Result<Self> {
        encoder.validate()?;
        classifier.validate()?;
        if classifier.in_dim != encoder.repr_dim {
            return Err(Error::config(format!(
                "classifier input {} does not match encoder output {}",
                classifier.in_dim, encoder.repr_dim
            )));
        }
        let mut params = init_params(&encoder_layout(&encoder), rng);
        let n_encoder = params.len();
        params.extend(init_params(&classifier_layout(&classifier), rng));
        let mut model = Model {
            encoder,
            classifier,
            params,
            n_encoder,
        };
        model.round_to_storage();
        Ok(model)
    }

    /// Rebuilds a model from explicit parameter tensors in layout order.
    pub fn from_params(encoder: EncoderConfig, classifier: ClassifierConfig, values: Vec<Tensor>) -> Result<Self> {
        let layout: Vec<_> = encoder_layout(&encoder)
            .into_iter()
            .chain(classifier_layout(&classifier))
            .collect();
        if layout.len() != values.len() {
            return Err(Error::shape("model params", &[layout.len()], &[values.len()]));
        }
        let mut params = Vec::with_capacity(values.len());
        for ((name, shape), v) in layout.into_iter().zip(values) {
            if v.shape() != shape.as_slice() {
                return Err(Error::shape("model param", &shape, v.shape()));
            }
            params.push(Param::new(name, v));
        }
        Ok(Model {
            n_encoder: 4 + 4 * encoder.n_blocks,
            encoder,
            classifier,
            params,
        })
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn encoder_params_mut(&mut self) -> &mut [Param] {
        &mut self.params[..self.n_encoder]
    }

    pub fn classifier_params_mut(&mut self) -> &mut [Param] {
        &mut self.params[self.n_encoder..]
    }

    pub fn encoder_params(&self) -> &[Param] {
        &self.params[..self.n_encoder]
    }

    pub fn classifier_params(&self) -> &[Param] {
        &self.params[self.n_encoder..]
    }

    pub fn n_encoder_params(&self) -> usize {
        self.n_encoder
    }

    /// Rounds every parameter to the nearest `f32`, the precision checkpoints store.
    pub fn round_to_storage(&mut self) {
        for p in &mut self.params {
            for v in p.value.data_mut() {
                *v = f64::from(*v as f32);
            }
        }
    }

    /// Puts every parameter on `tape`; frozen groups become constants.
    pub fn bind(&self, tape: &mut Tape, train_encoder: bool, train_classifier: bool) -> BoundModel {
        let mut put = |p: &Param, train: bool| {
            if train {
                tape.leaf(p.value.clone())
            } else {
                tape.constant(p.value.clone())
            }
        };
        let encoder = self.encoder_params().iter().map(|p| put(p, train_encoder)).collect();
        let classifier = self.classifier_params().iter().map(|p| put(p, train_classifier)).collect();
        BoundModel { encoder, classifier }
    }

    /// Copies gradients of bound leaves back onto the parameters.
    pub fn collect_grads(&mut self, tape: &Tape, bound: &BoundModel) {
        let vars = bound.encoder.iter().chain(&bound.classifier);
        for (p, &v) in self.params.iter_mut().zip(vars) {
            p.grad = if tape.requires_grad(v) {
                Some(tape.grad(v).map_or_else(|| vec![0.0; p.value.len()], <[f64]>::to_vec))
            } else {
                None
            };
        }
    }

    /// `[B, L, C] -> [B, L, repr]` without masking.
    pub fn encode_tensor(&self, x: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false, false);
        let xv = tape.constant(x.clone());
        let r = Encoder::new(&self.encoder, &bound.encoder)?.encode(&mut tape, xv, None)?;
        Ok(tape.value(r).clone())
    }

    /// `[B, L, C] -> [B, 3]` class probabilities from the unmasked, uncropped input.
    pub fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false, false);
        let xv = tape.constant(x.clone());
        let r = Encoder::new(&self.encoder, &bound.encoder)?.encode_channels_first(&mut tape, xv, None)?;
        let logits = Classifier::new(&self.classifier, &bound.classifier)?.logits_channels_first(&mut tape, r)?;
        let p = tape.softmax(logits);
        Ok(tape.value(p).clone())
    }
}
