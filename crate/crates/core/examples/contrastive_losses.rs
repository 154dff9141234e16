//! Temporal, instance-wise and hierarchical contrastive losses on random views,
//! with the per-level breakdown and gradients.
//!
//! cargo run --example contrastive_losses

use cleer::diffcore::{Tape, Tensor};
use cleer::losses::{dcl_loss, hcl_loss, hierarchy_depth, ContrastOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cleer::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z = Tensor::randn(&[4, 10, 6], &mut rng);
    let noise = Tensor::randn(&[4, 10, 6], &mut rng);
    // Second view: the first plus a little noise, so positives are easy to spot.
    let z_prime = Tensor::new(
        &[4, 10, 6],
        z.data().iter().zip(noise.data()).map(|(a, b)| a + 0.1 * b).collect(),
    )?;

    for symmetrize in [false, true] {
        let opts = ContrastOptions { symmetrize };
        let mut tape = Tape::new();
        let a = tape.leaf(z.clone());
        let b = tape.leaf(z_prime.clone());
        let dual = dcl_loss(&mut tape, a, b, opts)?;
        let (hcl, levels) = hcl_loss(&mut tape, a, b, opts)?;
        println!(
            "symmetrize={symmetrize}: tcl {:.4} icl {:.4} dcl {:.4} hcl {:.4}",
            tape.item(dual.tcl),
            tape.item(dual.icl),
            tape.item(dual.dcl),
            tape.item(hcl)
        );
        for level in &levels {
            println!("  level {} length {:2} dcl {:.4}", level.level, level.length, level.dcl);
        }
        tape.backward(hcl)?;
        let g = tape.grad(a).expect("leaf gradient");
        println!("  |grad z| = {:.4}", g.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    println!("levels for K=10: {}", hierarchy_depth(10));
    Ok(())
}
