use rand::Rng;

use crate::augment::{apply_crop, sample_crop_pair, sample_mask, MaskVector};
use crate::diffcore::{AdamState, Tape, Tensor};
use crate::error::{Error, Result};
use crate::losses::{contrastive_only, hcl_loss, joint_loss, ContrastOptions, LossBreakdown};
use crate::model::{Classifier, Encoder, Model};

/// Which loss terms contribute and which parameter groups move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepPlan {
    pub contrastive: bool,
    pub classification: bool,
    pub train_encoder: bool,
    pub train_classifier: bool,
}

impl StepPlan {
    pub fn joint() -> Self {
        StepPlan {
            contrastive: true,
            classification: true,
            train_encoder: true,
            train_classifier: true,
        }
    }

    pub fn classifier_only() -> Self {
        StepPlan {
            contrastive: false,
            ..StepPlan::joint()
        }
    }

    /// First phase of two-step training: encoder only, contrastive loss only.
    pub fn pretrain_encoder() -> Self {
        StepPlan {
            contrastive: true,
            classification: false,
            train_encoder: true,
            train_classifier: false,
        }
    }

    /// Second phase of two-step training: cross-entropy on a frozen encoder.
    pub fn frozen_encoder() -> Self {
        StepPlan {
            contrastive: false,
            classification: true,
            train_encoder: false,
            train_classifier: true,
        }
    }
}

/// Hyper-parameters a single step needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSettings {
    pub lambda_class: f64,
    pub mask_p: f64,
    pub contrast: ContrastOptions,
}

/// Adam over exactly the parameters `plan` trains, in model order.
pub fn optimizer_for(model: &Model, plan: &StepPlan, lr: f64) -> AdamState {
    let enc = model.encoder_params().iter().filter(|_| plan.train_encoder);
    let cls = model.classifier_params().iter().filter(|_| plan.train_classifier);
    AdamState::new(enc.chain(cls)).with_lr(lr)
}

/// One optimisation step on a `[B, T, C]` batch.
///
/// Both views share a single crop pair; masks are drawn per item and per view
/// at the cropped length. Classification always sees the full, unmasked window.
pub fn train_step<R: Rng + ?Sized>(
    model: &mut Model,
    optimizer: &mut AdamState,
    plan: &StepPlan,
    x: &Tensor,
    labels: &[usize],
    settings: &StepSettings,
    rng: &mut R,
) -> Result<LossBreakdown> {
    if x.ndim() != 3 {
        return Err(Error::shape("train_step input", x.shape(), &[0, 0, 0]));
    }
    let (b, t) = (x.shape()[0], x.shape()[1]);
    if labels.len() != b {
        return Err(Error::shape("train_step labels", &[b], &[labels.len()]));
    }
    if !plan.contrastive && !plan.classification {
        return Err(Error::config("a step needs at least one loss term"));
    }
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape, plan.train_encoder, plan.train_classifier);
    let encoder = Encoder::new(&model.encoder, &bound.encoder)?;

    let hcl = if plan.contrastive {
        if b < 2 {
            return Err(Error::config("contrastive steps need at least 2 items per batch"));
        }
        let pair = sample_crop_pair(t, rng)?;
        let mut views = Vec::with_capacity(2);
        for (start, end) in [pair.first(), pair.second()] {
            let len = end + 1 - start;
            let masks = (0..b)
                .map(|_| sample_mask(len, settings.mask_p, rng))
                .collect::<Result<Vec<MaskVector>>>()?;
            let xv = tape.constant(apply_crop(x, start, end)?);
            views.push(encoder.encode(&mut tape, xv, Some(&masks))?);
        }
        let (o1, o2) = pair.overlap_offsets();
        let k = pair.overlap_len();
        let z = tape.slice(views[0], 1, o1, k)?;
        let z_prime = tape.slice(views[1], 1, o2, k)?;
        Some(hcl_loss(&mut tape, z, z_prime, settings.contrast)?)
    } else {
        None
    };

    let (loss, breakdown) = if plan.classification {
        let xv = tape.constant(x.clone());
        let r = encoder.encode_channels_first(&mut tape, xv, None)?;
        let logits = Classifier::new(&model.classifier, &bound.classifier)?.logits_channels_first(&mut tape, r)?;
        joint_loss(&mut tape, hcl, logits, labels, settings.lambda_class)?
    } else {
        let (h, levels) = hcl.expect("contrastive term present");
        (h, contrastive_only(&tape, h, levels))
    };
    if !breakdown.total.is_finite() {
        return Err(Error::Contract(format!("non-finite loss {}", breakdown.total)));
    }

    tape.backward(loss)?;
    model.collect_grads(&tape, &bound);
    optimizer.step(model.params_mut().iter_mut().filter(|p| p.grad.is_some()))?;
    model.round_to_storage();
    Ok(breakdown)
}
