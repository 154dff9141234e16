//! Finite-difference verification of every differentiable kernel and of the
//! full training objective on a toy network.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::augment::{apply_crop, MaskVector};
use crate::diffcore::{grad_check, GradCheckOptions, GradCheckReport, Tape, Tensor, Var};
use crate::error::Result;
use crate::losses::{hcl_loss, icl_loss, joint_loss, tcl_loss, ContrastOptions};
use crate::model::{Classifier, ClassifierConfig, Encoder, EncoderConfig, Model};

#[derive(Debug, Clone, Serialize)]
pub struct NamedCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub checked: usize,
    pub passed: bool,
}

impl NamedCheck {
    fn new(name: &str, report: GradCheckReport) -> Self {
        NamedCheck {
            name: name.to_string(),
            max_rel_error: report.max_rel_error,
            checked: report.checked,
            passed: report.passed,
        }
    }
}

/// Weighted sum with fixed random weights, so every output element matters.
fn project(tape: &mut Tape, y: Var, seed: u64) -> Result<Var> {
    let n = tape.value(y).len();
    let w = Tensor::randn(&[n], &mut ChaCha8Rng::seed_from_u64(seed)).into_data();
    tape.dot_const(y, w)
}

fn randn(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::randn(shape, rng)
}

/// The toy network used for the end-to-end check: B=2, T=8, C=3, hidden 8, repr 12, 2 blocks.
pub fn toy_model(seed: u64) -> Result<Model> {
    let enc = EncoderConfig::with_dims(3, 8, 12, 2);
    let cls = ClassifierConfig {
        conv_channels: 6,
        fc_dims: vec![5],
        ..ClassifierConfig::new(12)
    };
    Model::new(enc, cls, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn joint_objective(seed: u64, opts: GradCheckOptions) -> Result<GradCheckReport> {
    let model = toy_model(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x = randn(&[2, 8, 3], &mut rng);
    let (enc_cfg, cls_cfg) = (model.encoder.clone(), model.classifier.clone());
    let n_enc = model.n_encoder_params();
    let masks = [
        MaskVector { bits: vec![true, false, true, true, true, false] },
        MaskVector { bits: vec![true, true, true, false, true, true] },
    ];
    let f = |tape: &mut Tape, v: &[Var]| {
        let enc = Encoder::new(&enc_cfg, &v[..n_enc])?;
        let cls = Classifier::new(&cls_cfg, &v[n_enc..])?;
        let x1 = tape.constant(apply_crop(&x, 1, 6)?);
        let x2 = tape.constant(apply_crop(&x, 3, 8)?);
        let r1 = enc.encode(tape, x1, Some(&masks))?;
        let r2 = enc.encode(tape, x2, Some(&masks))?;
        let z1 = tape.slice(r1, 1, 2, 4)?;
        let z2 = tape.slice(r2, 1, 0, 4)?;
        let h = hcl_loss(tape, z1, z2, ContrastOptions::default())?;
        let xf = tape.constant(x.clone());
        let r = enc.encode_channels_first(tape, xf, None)?;
        let logits = cls.logits_channels_first(tape, r)?;
        Ok(joint_loss(tape, Some(h), logits, &[0, 2], 1.0)?.0)
    };
    let inputs: Vec<Tensor> = model.params().iter().map(|p| p.value.clone()).collect();
    grad_check(f, &inputs, opts)
}

/// Runs every check; each entry reports whether it met `opts.tol_rel`.
pub fn gradient_suite(seed: u64, opts: GradCheckOptions) -> Result<Vec<NamedCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut run = |name: &str, inputs: Vec<Tensor>, f: &dyn Fn(&mut Tape, &[Var]) -> Result<Var>| -> Result<()> {
        out.push(NamedCheck::new(name, grad_check(f, &inputs, opts)?));
        Ok(())
    };

    run("linear", vec![randn(&[3, 4, 5], &mut rng), randn(&[5, 6], &mut rng), randn(&[6], &mut rng)], &|t, v| {
        let y = t.linear(v[0], v[1], Some(v[2]))?;
        project(t, y, 1)
    })?;
    for d in [1, 2, 4] {
        let inputs = vec![randn(&[2, 3, 9], &mut rng), randn(&[4, 3, 3], &mut rng), randn(&[4], &mut rng)];
        run(&format!("conv1d_dilation_{d}"), inputs, &move |t, v| {
            let y = t.conv1d(v[0], v[1], Some(v[2]), d)?;
            project(t, y, 2)
        })?;
    }
    run("max_pool_pairs", vec![randn(&[2, 7, 3], &mut rng)], &|t, v| {
        let y = t.max_pool_pairs(v[0], 1)?;
        project(t, y, 3)
    })?;
    run("max_over", vec![randn(&[2, 4, 6], &mut rng)], &|t, v| {
        let y = t.max_over(v[0], 2)?;
        project(t, y, 4)
    })?;
    run("relu", vec![randn(&[5, 4], &mut rng)], &|t, v| {
        let y = t.relu(v[0]);
        project(t, y, 5)
    })?;
    run("permute_slice", vec![randn(&[2, 5, 3], &mut rng)], &|t, v| {
        let p = t.permute(v[0], &[1, 0, 2])?;
        let y = t.slice(p, 0, 1, 3)?;
        project(t, y, 6)
    })?;
    run("softmax", vec![randn(&[4, 3], &mut rng)], &|t, v| {
        let y = t.softmax(v[0]);
        project(t, y, 7)
    })?;
    run("cross_entropy", vec![randn(&[4, 3], &mut rng)], &|t, v| t.cross_entropy(v[0], &[0, 2, 1, 2]))?;
    let views = || -> Vec<Tensor> {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
        vec![randn(&[3, 5, 4], &mut r), randn(&[3, 5, 4], &mut r)]
    };
    run("temporal_contrast", views(), &|t, v| tcl_loss(t, v[0], v[1]))?;
    run("instance_contrast", views(), &|t, v| icl_loss(t, v[0], v[1]))?;
    run("hierarchical_contrast", views(), &|t, v| Ok(hcl_loss(t, v[0], v[1], ContrastOptions::default())?.0))?;
    run("symmetric_hierarchical_contrast", views(), &|t, v| {
        Ok(hcl_loss(t, v[0], v[1], ContrastOptions { symmetrize: true })?.0)
    })?;
    out.push(NamedCheck::new("joint_objective_toy_network", joint_objective(seed, opts)?));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_at_default_tolerance() {
        let checks = gradient_suite(0, GradCheckOptions::default()).unwrap();
        assert!(checks.len() >= 15);
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }
}
