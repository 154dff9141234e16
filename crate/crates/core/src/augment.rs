//! Context views for contrastive training: overlapping random crops of the raw
//! window and Bernoulli timestamp masks applied to latent vectors.

use rand::Rng;

use crate::diffcore::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Two crops `[a1, b1]` and `[a2, b2]` (1-based, inclusive) with
/// `0 < a1 <= a2 <= b1 <= b2 <= T`; their overlap is `[a2, b1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropPair {
    pub a1: usize,
    pub b1: usize,
    pub a2: usize,
    pub b2: usize,
}

impl CropPair {
    pub fn is_valid(&self, t: usize) -> bool {
        0 < self.a1 && self.a1 <= self.a2 && self.a2 <= self.b1 && self.b1 <= self.b2 && self.b2 <= t
    }

    pub fn overlap_len(&self) -> usize {
        self.b1 + 1 - self.a2
    }

    pub fn first(&self) -> (usize, usize) {
        (self.a1, self.b1)
    }

    pub fn second(&self) -> (usize, usize) {
        (self.a2, self.b2)
    }

    /// Where the overlap starts inside the first and second view (0-based).
    pub fn overlap_offsets(&self) -> (usize, usize) {
        (self.a2 - self.a1, 0)
    }
}

/// Draws `a2`, then `b1 >= a2`, then `a1 <= a2`, then `b2 >= b1`, each uniformly.
pub fn sample_crop_pair<R: Rng + ?Sized>(t: usize, rng: &mut R) -> Result<CropPair> {
    if t < 1 {
        return Err(Error::config("crop sampling needs T >= 1"));
    }
    let a2 = rng.gen_range(1..=t);
    let b1 = rng.gen_range(a2..=t);
    let a1 = rng.gen_range(1..=a2);
    let b2 = rng.gen_range(b1..=t);
    Ok(CropPair { a1, b1, a2, b2 })
}

/// Slices timestamps `[a, b]` (1-based, inclusive) from a `[T, C]` or `[B, T, C]` tensor.
pub fn apply_crop(x: &Tensor, a: usize, b: usize) -> Result<Tensor> {
    let nd = x.ndim();
    if nd < 2 {
        return Err(Error::shape("apply_crop", x.shape(), &[0, 0]));
    }
    let (t, c) = (x.shape()[nd - 2], x.shape()[nd - 1]);
    if a < 1 || a > b || b > t {
        return Err(Error::Index(format!("crop [{a}, {b}] outside [1, {t}]")));
    }
    let outer: usize = x.shape()[..nd - 2].iter().product();
    let len = b + 1 - a;
    let mut data = Vec::with_capacity(outer * len * c);
    for o in 0..outer {
        let base = (o * t + a - 1) * c;
        data.extend_from_slice(&x.data()[base..base + len * c]);
    }
    let mut shape = x.shape().to_vec();
    shape[nd - 2] = len;
    Tensor::new(&shape, data)
}

/// Keep/mask flags along time; `true` keeps the latent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVector {
    pub bits: Vec<bool>,
}

impl MaskVector {
    pub fn all_kept(len: usize) -> Self {
        MaskVector { bits: vec![true; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn masked_fraction(&self) -> f64 {
        self.bits.iter().filter(|b| !**b).count() as f64 / self.bits.len() as f64
    }
}

/// Masks each of `len` positions independently with probability `p`.
pub fn sample_mask<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Result<MaskVector> {
    if len < 1 {
        return Err(Error::config("mask length must be >= 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!("mask probability {p} outside [0, 1]")));
    }
    Ok(MaskVector {
        bits: (0..len).map(|_| !rng.gen_bool(p)).collect(),
    })
}

/// Zeroes masked timestamps of a `[B, L, D]` latent; one mask per batch item.
pub fn apply_mask(tape: &mut Tape, z: Var, masks: &[MaskVector]) -> Result<Var> {
    let shape = tape.shape(z).to_vec();
    if shape.len() != 3 || masks.len() != shape[0] {
        return Err(Error::shape("apply_mask", &shape, &[masks.len()]));
    }
    let (l, d) = (shape[1], shape[2]);
    if let Some(bad) = masks.iter().find(|m| m.len() != l) {
        return Err(Error::shape("apply_mask", &shape, &[bad.len()]));
    }
    let factor: Vec<f64> = masks
        .iter()
        .flat_map(|m| m.bits.iter())
        .flat_map(|&keep| std::iter::repeat(if keep { 1.0 } else { 0.0 }).take(d))
        .collect();
    tape.mul_const(z, factor)
}
