//! Temporal, instance-wise, dual, and hierarchical contrastive losses plus the joint objective.
//!
//! All losses operate on the aligned overlap representations of the two views,
//! `z` and `z_prime`, both `[B, K, D]`. Similarities are raw dot products with
//! no temperature or normalisation.
//!
//! The temporal and instance-wise terms share one kernel, [`Tape::contrast`]:
//! temporal contrast groups by instance and ranks timestamps, instance-wise
//! contrast is the same computation after swapping the batch and time axes.

use serde::{Deserialize, Serialize};

use crate::diffcore::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContrastOptions {
    /// Average the loss over both anchor views instead of anchoring on the first only.
    pub symmetrize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelLoss {
    pub level: usize,
    pub length: usize,
    pub tcl: f64,
    pub icl: f64,
    pub dcl: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub per_level: Vec<LevelLoss>,
    pub hcl: f64,
    pub class_loss: f64,
    pub total: f64,
}

/// Scalar nodes for one resolution level.
#[derive(Debug, Clone, Copy)]
pub struct DualTerms {
    pub tcl: Var,
    pub icl: Var,
    pub dcl: Var,
}

fn check_pair(tape: &Tape, z: Var, z_prime: Var) -> Result<()> {
    let s = tape.shape(z);
    if s.len() != 3 || tape.shape(z_prime) != s {
        return Err(Error::shape("contrastive views", s, tape.shape(z_prime)));
    }
    Ok(())
}

fn directed(tape: &mut Tape, anchor: Var, positive: Var, opts: ContrastOptions) -> Result<Var> {
    let forward = tape.contrast(anchor, positive)?;
    if !opts.symmetrize {
        return Ok(forward);
    }
    let backward = tape.contrast(positive, anchor)?;
    tape.mean_of(&[forward, backward])
}

/// Temporal contrast: positives are the same timestamp in the other view,
/// negatives are other overlap timestamps of the same instance in either view.
pub fn tcl_loss(tape: &mut Tape, z: Var, z_prime: Var) -> Result<Var> {
    tcl_loss_with(tape, z, z_prime, ContrastOptions::default())
}

pub fn tcl_loss_with(tape: &mut Tape, z: Var, z_prime: Var, opts: ContrastOptions) -> Result<Var> {
    check_pair(tape, z, z_prime)?;
    directed(tape, z, z_prime, opts)
}

/// Instance-wise contrast: negatives are other batch instances at the same timestamp.
pub fn icl_loss(tape: &mut Tape, z: Var, z_prime: Var) -> Result<Var> {
    icl_loss_with(tape, z, z_prime, ContrastOptions::default())
}

pub fn icl_loss_with(tape: &mut Tape, z: Var, z_prime: Var, opts: ContrastOptions) -> Result<Var> {
    check_pair(tape, z, z_prime)?;
    let zt = tape.permute(z, &[1, 0, 2])?;
    let zpt = tape.permute(z_prime, &[1, 0, 2])?;
    directed(tape, zt, zpt, opts)
}

/// Sum of the temporal and instance-wise means over the same `(i, t)` set.
pub fn dcl_loss(tape: &mut Tape, z: Var, z_prime: Var, opts: ContrastOptions) -> Result<DualTerms> {
    let tcl = tcl_loss_with(tape, z, z_prime, opts)?;
    let icl = icl_loss_with(tape, z, z_prime, opts)?;
    let dcl = tape.add(tcl, icl)?;
    Ok(DualTerms { tcl, icl, dcl })
}

/// Dual loss at full resolution and after each kernel-2 max-pool along time,
/// down to length 1; returns the mean over levels and the per-level record.
pub fn hcl_loss(tape: &mut Tape, z: Var, z_prime: Var, opts: ContrastOptions) -> Result<(Var, Vec<LevelLoss>)> {
    check_pair(tape, z, z_prime)?;
    if tape.shape(z)[1] == 0 {
        return Err(Error::Empty("overlap of zero timestamps".into()));
    }
    let (mut a, mut b) = (z, z_prime);
    let mut level_vars = Vec::new();
    let mut levels = Vec::new();
    loop {
        let length = tape.shape(a)[1];
        let terms = dcl_loss(tape, a, b, opts)?;
        levels.push(LevelLoss {
            level: levels.len(),
            length,
            tcl: tape.item(terms.tcl),
            icl: tape.item(terms.icl),
            dcl: tape.item(terms.dcl),
        });
        level_vars.push(terms.dcl);
        if length == 1 {
            break;
        }
        a = tape.max_pool_pairs(a, 1)?;
        b = tape.max_pool_pairs(b, 1)?;
    }
    let hcl = tape.mean_of(&level_vars)?;
    Ok((hcl, levels))
}

/// Number of hierarchy levels for an overlap of `k` timestamps: `ceil(log2 k) + 1`.
pub fn hierarchy_depth(k: usize) -> usize {
    let mut n = 1;
    let mut len = k;
    while len > 1 {
        len = len.div_ceil(2);
        n += 1;
    }
    n
}

/// `total = hcl + lambda_class * cross_entropy(logits, labels)`; without `hcl` the total is the cross-entropy alone.
pub fn joint_loss(
    tape: &mut Tape,
    hcl: Option<(Var, Vec<LevelLoss>)>,
    logits: Var,
    labels: &[usize],
    lambda_class: f64,
) -> Result<(Var, LossBreakdown)> {
    let ce = tape.cross_entropy(logits, labels)?;
    let class_loss = tape.item(ce);
    let (total, per_level, hcl_value) = match hcl {
        Some((h, levels)) => {
            let weighted = tape.scale(ce, lambda_class);
            let total = tape.add(h, weighted)?;
            (total, levels, tape.item(h))
        }
        None => (ce, Vec::new(), 0.0),
    };
    let breakdown = LossBreakdown {
        per_level,
        hcl: hcl_value,
        class_loss,
        total: tape.item(total),
    };
    Ok((total, breakdown))
}

/// Breakdown for a contrastive-only objective.
pub fn contrastive_only(tape: &Tape, hcl: Var, levels: Vec<LevelLoss>) -> LossBreakdown {
    LossBreakdown {
        per_level: levels,
        hcl: tape.item(hcl),
        class_loss: 0.0,
        total: tape.item(hcl),
    }
}
