mod common;

use common::{close, oracle_hcl, oracle_icl, oracle_tcl, pair, view};
use cleer::diffcore::{grad_check, GradCheckOptions, Tape, Tensor};
use cleer::losses::{dcl_loss, hcl_loss, hierarchy_depth, icl_loss, joint_loss, tcl_loss, ContrastOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn losses_match_loop_oracles_on_random_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..150 {
        let shape = [rng.gen_range(1..=4), rng.gen_range(1..=8), rng.gen_range(1..=5)];
        let (z, zp) = pair(shape, 1.0, case);
        let (vz, vzp) = (view(&z), view(&zp));
        let mut tape = Tape::new();
        let (a, b) = (tape.leaf(z.clone()), tape.leaf(zp.clone()));
        let tcl = tcl_loss(&mut tape, a, b).unwrap();
        let icl = icl_loss(&mut tape, a, b).unwrap();
        let (hcl, levels) = hcl_loss(&mut tape, a, b, ContrastOptions::default()).unwrap();
        let (want_hcl, depth) = oracle_hcl(&vz, &vzp);
        assert!(close(tape.item(tcl), oracle_tcl(&vz, &vzp), 1e-9), "tcl case {case} {shape:?}");
        assert!(close(tape.item(icl), oracle_icl(&vz, &vzp), 1e-9), "icl case {case} {shape:?}");
        assert!(close(tape.item(hcl), want_hcl, 1e-9), "hcl case {case} {shape:?}");
        assert_eq!(levels.len(), depth);
        assert_eq!(depth, hierarchy_depth(shape[1]));
    }
}

#[test]
fn symmetrized_loss_averages_both_anchor_views() {
    let (z, zp) = pair([3, 5, 4], 1.0, 4);
    let (vz, vzp) = (view(&z), view(&zp));
    let mut tape = Tape::new();
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let terms = dcl_loss(&mut tape, a, b, ContrastOptions { symmetrize: true }).unwrap();
    let want_t = 0.5 * (oracle_tcl(&vz, &vzp) + oracle_tcl(&vzp, &vz));
    let want_i = 0.5 * (oracle_icl(&vz, &vzp) + oracle_icl(&vzp, &vz));
    assert!(close(tape.item(terms.tcl), want_t, 1e-12));
    assert!(close(tape.item(terms.icl), want_i, 1e-12));
}

#[test]
fn degenerate_sizes_give_zero() {
    let (z, zp) = pair([3, 1, 4], 1.0, 1);
    let mut tape = Tape::new();
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let l = tcl_loss(&mut tape, a, b).unwrap();
    assert_eq!(tape.item(l), 0.0);
    let (z, zp) = pair([1, 6, 4], 1.0, 2);
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let l = icl_loss(&mut tape, a, b).unwrap();
    assert_eq!(tape.item(l), 0.0);
}

#[test]
fn zero_inputs_give_uniform_log_counts() {
    for (b, k) in [(2, 3), (4, 8), (3, 5)] {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::zeros(&[b, k, 3]));
        let c = tape.leaf(Tensor::zeros(&[b, k, 3]));
        let (tv, iv) = (tcl_loss(&mut tape, a, c).unwrap(), icl_loss(&mut tape, a, c).unwrap());
        let (tcl, icl) = (tape.item(tv), tape.item(iv));
        assert!((tcl - ((2 * k - 1) as f64).ln()).abs() < 1e-12);
        assert!((icl - ((2 * b - 1) as f64).ln()).abs() < 1e-12);
    }
}

#[test]
fn overlap_of_eight_has_four_levels() {
    let (z, zp) = pair([2, 8, 3], 1.0, 5);
    let mut tape = Tape::new();
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let (_, levels) = hcl_loss(&mut tape, a, b, ContrastOptions::default()).unwrap();
    let lengths: Vec<usize> = levels.iter().map(|l| l.length).collect();
    assert_eq!(lengths, vec![8, 4, 2, 1]);
}

#[test]
fn dual_is_sum_of_parts() {
    let (z, zp) = pair([3, 6, 4], 1.0, 6);
    let mut tape = Tape::new();
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let terms = dcl_loss(&mut tape, a, b, ContrastOptions::default()).unwrap();
    let sum = tape.item(terms.tcl) + tape.item(terms.icl);
    assert!((tape.item(terms.dcl) - sum).abs() <= 1e-12 * sum.abs());
}

#[test]
fn large_magnitudes_stay_finite() {
    let (z, zp) = pair([3, 5, 4], 80.0, 7);
    let (vz, vzp) = (view(&z), view(&zp));
    let mut tape = Tape::new();
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let (h, _) = hcl_loss(&mut tape, a, b, ContrastOptions::default()).unwrap();
    let v = tape.item(h);
    assert!(v.is_finite());
    assert!(close(v, oracle_hcl(&vz, &vzp).0, 1e-9));
    tape.backward(h).unwrap();
    assert!(tape.grad(a).unwrap().iter().all(|g| g.is_finite()));
}

#[test]
fn hierarchical_loss_passes_gradient_check() {
    for (shape, seed) in [([2, 5, 3], 1), ([3, 4, 2], 2), ([4, 7, 3], 3)] {
        let (z, zp) = pair(shape, 0.5, seed);
        let f = |tape: &mut Tape, v: &[cleer::diffcore::Var]| {
            Ok(hcl_loss(tape, v[0], v[1], ContrastOptions::default())?.0)
        };
        let report = grad_check(f, &[z, zp], GradCheckOptions::default()).unwrap();
        assert!(report.passed, "{shape:?}: {report:?}");
    }
}

#[test]
fn joint_gradient_check() {
    let (z, zp) = pair([3, 4, 2], 0.5, 8);
    let logits = Tensor::randn(&[3, 3], &mut ChaCha8Rng::seed_from_u64(9));
    let f = |tape: &mut Tape, v: &[cleer::diffcore::Var]| {
        let h = hcl_loss(tape, v[0], v[1], ContrastOptions::default())?;
        Ok(joint_loss(tape, Some(h), v[2], &[0, 2, 1], 0.7)?.0)
    };
    let report = grad_check(f, &[z, zp, logits], GradCheckOptions::default()).unwrap();
    assert!(report.passed, "{report:?}");
}

fn permute_batch(t: &Tensor, perm: &[usize]) -> Tensor {
    let row = t.len() / t.shape()[0];
    let data = perm.iter().flat_map(|&i| t.data()[i * row..(i + 1) * row].to_vec()).collect();
    Tensor::new(t.shape(), data).unwrap()
}

proptest! {
    #[test]
    fn losses_are_batch_permutation_invariant(seed in 0u64..1000, b in 2usize..5, k in 1usize..7) {
        let (z, zp) = pair([b, k, 3], 1.0, seed);
        let mut perm: Vec<usize> = (0..b).collect();
        perm.rotate_left(1);
        let (pz, pzp) = (permute_batch(&z, &perm), permute_batch(&zp, &perm));
        let mut tape = Tape::new();
        let (a, c) = (tape.leaf(z), tape.leaf(zp));
        let (pa, pc) = (tape.leaf(pz), tape.leaf(pzp));
        let h1 = hcl_loss(&mut tape, a, c, ContrastOptions::default()).unwrap().0;
        let h2 = hcl_loss(&mut tape, pa, pc, ContrastOptions::default()).unwrap().0;
        prop_assert!(close(tape.item(h1), tape.item(h2), 1e-12));
    }

    #[test]
    fn losses_are_nonnegative(seed in 0u64..1000, b in 1usize..5, k in 1usize..9, scale in 0.0f64..5.0) {
        let (z, zp) = pair([b, k, 4], scale, seed);
        let mut tape = Tape::new();
        let (a, c) = (tape.leaf(z), tape.leaf(zp));
        let terms = dcl_loss(&mut tape, a, c, ContrastOptions::default()).unwrap();
        prop_assert!(tape.item(terms.tcl) >= -1e-12);
        prop_assert!(tape.item(terms.icl) >= -1e-12);
    }
}
