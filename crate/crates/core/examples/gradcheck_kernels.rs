//! Finite-difference check of every differentiable kernel and the full joint objective.
//!
//! cargo run --example gradcheck_kernels

use cleer::checks::gradient_suite;
use cleer::diffcore::{grad_check, GradCheckOptions, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cleer::Result<()> {
    for check in gradient_suite(0, GradCheckOptions::default())? {
        println!(
            "{:32} {:>5} entries  max rel err {:.2e}  {}",
            check.name,
            check.checked,
            check.max_rel_error,
            if check.passed { "ok" } else { "FAILED" }
        );
    }

    // Checking a custom expression: sum(relu(x) * w).
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Tensor::randn(&[4, 5], &mut rng);
    let w: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
    let report = grad_check(
        |tape, v| {
            let r = tape.relu(v[0]);
            tape.dot_const(r, w.clone())
        },
        &[x],
        GradCheckOptions::default(),
    )?;
    println!("custom relu-dot: max rel err {:.2e}", report.max_rel_error);
    Ok(())
}
