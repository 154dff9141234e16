//! Overlapping crop pairs and timestamp masks, the two sources of context views.
//!
//! cargo run --example augmentation

use cleer::augment::{apply_crop, apply_mask, sample_crop_pair, sample_mask};
use cleer::diffcore::{Tape, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cleer::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = 12;
    let x = Tensor::new(&[t, 1], (1..=t).map(|v| v as f64).collect())?;

    for _ in 0..3 {
        let pair = sample_crop_pair(t, &mut rng)?;
        let first = apply_crop(&x, pair.a1, pair.b1)?;
        let second = apply_crop(&x, pair.a2, pair.b2)?;
        println!(
            "crops {:?} and {:?}, overlap [{}, {}] ({} steps)",
            pair.first(),
            pair.second(),
            pair.a2,
            pair.b1,
            pair.overlap_len()
        );
        println!("  view 1 {:?}\n  view 2 {:?}", first.data(), second.data());
    }

    let n = 20_000;
    let total: usize = (0..n).map(|_| sample_crop_pair(400, &mut rng).map(|p| p.overlap_len())).sum::<cleer::Result<usize>>()?;
    println!("mean overlap at T=400: {:.1}", total as f64 / n as f64);

    let mask = sample_mask(10, 0.5, &mut rng)?;
    let mut tape = Tape::new();
    let z = tape.leaf(Tensor::full(&[1, 10, 2], 1.0));
    let masked = apply_mask(&mut tape, z, &[mask.clone()])?;
    println!("mask {:?}", mask.bits.iter().map(|&b| u8::from(b)).collect::<Vec<_>>());
    println!("masked latent {:?}", tape.value(masked).data());
    Ok(())
}
