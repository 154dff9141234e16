//! End-to-end acceptance criteria A1-A9. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; positional arguments (e.g. `A4 A6`) select a subset.

mod common;

use std::fs;
use std::process::Command;
use std::time::Instant;

use cleer::ablation::{per_channel_eval, reduced_config, AblationMethod};
use cleer::augment::{sample_crop_pair, sample_mask};
use cleer::checks::gradient_suite;
use cleer::data::{load_segments, make_synthetic_dataset, segment_recording, LabelStream, Recording, SyntheticSpec};
use cleer::diffcore::{GradCheckOptions, Tape, Tensor};
use cleer::losses::{hcl_loss, icl_loss, tcl_loss, ContrastOptions};
use cleer::model::load_checkpoint;
use cleer::preprocess::{apply_filter, average_reference, FilterSpec};
use cleer::trainer::{compare_modes, evaluate, run_skcv, CvReport, TrainConfig, TrainMode};
use common::{oracle_hcl, oracle_icl, oracle_tcl, pair, view};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn a4_spec(snr_db: f64) -> SyntheticSpec {
    SyntheticSpec {
        n_per_class: 200,
        t: 128,
        c: 8,
        informative: vec![2, 5],
        snr_db,
        seed: 7,
        ..SyntheticSpec::default()
    }
}

fn a1_gradients() -> Verdict {
    let start = Instant::now();
    let checks = gradient_suite(0, GradCheckOptions::default()).expect("suite runs");
    let secs = start.elapsed().as_secs_f64();
    let worst = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let has_joint = checks.iter().any(|c| c.name == "joint_objective_toy_network");
    verdict(
        failed.is_empty() && has_joint && worst < 1e-4 && secs < 120.0,
        format!("{} checks, worst rel err {worst:.2e}, {secs:.1}s, failed {failed:?}", checks.len()),
    )
}

fn a2_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 200;
    let mut worst = 0.0f64;
    for case in 0..cases {
        let shape = [rng.gen_range(1..=4), rng.gen_range(1..=8), rng.gen_range(1..=5)];
        let (z, zp) = pair(shape, 1.0, 10_000 + case);
        let (vz, vzp) = (view(&z), view(&zp));
        let mut tape = Tape::new();
        let (a, b) = (tape.leaf(z), tape.leaf(zp));
        let tcl = tcl_loss(&mut tape, a, b).unwrap();
        let icl = icl_loss(&mut tape, a, b).unwrap();
        let (hcl, _) = hcl_loss(&mut tape, a, b, ContrastOptions::default()).unwrap();
        let want_t = oracle_tcl(&vz, &vzp);
        let want_i = oracle_icl(&vz, &vzp);
        let pairs = [
            (tape.item(tcl), want_t),
            (tape.item(icl), want_i),
            (tape.item(tcl) + tape.item(icl), want_t + want_i),
            (tape.item(hcl), oracle_hcl(&vz, &vzp).0),
        ];
        for (got, want) in pairs {
            worst = worst.max((got - want).abs() / (1.0 + want.abs()));
        }
    }
    verdict(worst <= 1e-9, format!("{cases} cases, worst relative deviation {worst:.2e}"))
}

fn a3_identities() -> Verdict {
    let mut worst = 0.0f64;
    let mut tape = Tape::new();
    let (z, zp) = pair([3, 1, 4], 1.0, 1);
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let t = tcl_loss(&mut tape, a, b).unwrap();
    worst = worst.max(tape.item(t).abs());
    let (z, zp) = pair([1, 6, 4], 1.0, 2);
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let i = icl_loss(&mut tape, a, b).unwrap();
    worst = worst.max(tape.item(i).abs());
    for (bsz, k) in [(2, 2), (3, 5), (4, 8)] {
        let a = tape.leaf(Tensor::zeros(&[bsz, k, 3]));
        let b = tape.leaf(Tensor::zeros(&[bsz, k, 3]));
        let t = tcl_loss(&mut tape, a, b).unwrap();
        let i = icl_loss(&mut tape, a, b).unwrap();
        worst = worst.max((tape.item(t) - ((2 * k - 1) as f64).ln()).abs());
        worst = worst.max((tape.item(i) - ((2 * bsz - 1) as f64).ln()).abs());
    }
    let (z, zp) = pair([2, 8, 3], 1.0, 3);
    let (a, b) = (tape.leaf(z), tape.leaf(zp));
    let (_, levels) = hcl_loss(&mut tape, a, b, ContrastOptions::default()).unwrap();
    verdict(
        worst <= 1e-12 && levels.len() == 4,
        format!("max identity error {worst:.2e}, K=8 levels {}", levels.len()),
    )
}

fn a4_end_to_end() -> Verdict {
    let set = make_synthetic_dataset(&a4_spec(0.0)).unwrap();
    let start = Instant::now();
    let report = run_skcv(&set, &TrainConfig::small()).unwrap().report;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        report.mean_accuracy >= 0.90 && secs < 15.0 * 60.0,
        format!(
            "mean accuracy {:.4} (folds {:?}) in {secs:.0}s",
            report.mean_accuracy,
            rounded(&report.fold_accuracies())
        ),
    )
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}

fn a5_joint_vs_baselines() -> Verdict {
    let set = make_synthetic_dataset(&a4_spec(-6.0)).unwrap();
    let seeds = [7, 8, 9, 10, 11];
    let cmp = compare_modes(&set, &TrainConfig::small(), &TrainMode::ALL, &seeds).unwrap();
    println!("{}", cmp.table());
    let joint = cmp.summary(TrainMode::Joint).unwrap().mean_accuracy;
    let baseline = cmp.summary(TrainMode::ClassifierOnly).unwrap().mean_accuracy;
    let two_step = cmp.summary(TrainMode::TwoStep).unwrap().mean_accuracy;
    verdict(
        joint >= baseline - 0.02,
        format!("joint {joint:.4}, two_step {two_step:.4}, classifier_only {baseline:.4}; table emitted above"),
    )
}

fn a6_channel_ablation() -> Verdict {
    let set = make_synthetic_dataset(&a4_spec(0.0)).unwrap();
    let report = per_channel_eval(&set, &reduced_config(), AblationMethod::Retrain).unwrap();
    let ranked = report.ranked();
    let top: Vec<usize> = ranked.iter().take(2).map(|r| r.channel_index).collect();
    let top_ok = top.contains(&2) && top.contains(&5);
    let others_ok = report
        .rows
        .iter()
        .filter(|r| r.channel_index != 2 && r.channel_index != 5)
        .all(|r| (0.23..=0.43).contains(&r.mean_accuracy));
    let scores: Vec<String> = report.rows.iter().map(|r| format!("{}:{:.3}", r.channel_index, r.mean_accuracy)).collect();
    verdict(top_ok && others_ok, format!("top two {top:?}; {}", scores.join(" ")))
}

fn a7_augmentation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let t = 400;
    let violations = (0..100_000)
        .filter(|_| {
            let p = sample_crop_pair(t, &mut rng).unwrap();
            !(p.is_valid(t) && p.overlap_len() >= 1)
        })
        .count();
    let n = 10_000;
    let mean = (0..n).map(|_| sample_mask(100, 0.5, &mut rng).unwrap().masked_fraction()).sum::<f64>() / n as f64;
    verdict(
        violations == 0 && (0.49..=0.51).contains(&mean),
        format!("{violations} crop violations in 1e5; mean masked fraction {mean:.4}"),
    )
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin()).collect()
}

fn a8_signal_chain() -> Verdict {
    let fs = 500.0;
    let tone = sine(60.0, fs, 5000);
    let notched = apply_filter(&[tone.clone()], &FilterSpec::notch(fs)).unwrap();
    let notch_db = 20.0 * (rms(&tone) / rms(&notched[0])).log10();
    let mid = sine(25.0, fs, 5000);
    let passed = apply_filter(&[mid.clone()], &FilterSpec::bandpass(fs)).unwrap();
    let pass_db = 20.0 * (rms(&passed[0]) / rms(&mid)).log10();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let chans: Vec<Vec<f64>> = (0..16).map(|_| Tensor::randn(&[1000], &mut rng).into_data()).collect();
    let referenced = average_reference(&chans).unwrap();
    let worst_mean = (0..1000)
        .map(|t| (referenced.iter().map(|c| c[t]).sum::<f64>() / 16.0).abs())
        .fold(0.0, f64::max);
    let rec = Recording::new(vec![vec![0.0; 48_000]], 200.0, LabelStream::Whole(0)).unwrap();
    let windows = segment_recording(&rec, 2.0, 0.2).unwrap().len();
    verdict(
        notch_db >= 20.0 && pass_db.abs() <= 3.0 && worst_mean <= 1e-12 && windows == 133,
        format!(
            "notch {notch_db:.1} dB down, bandpass {pass_db:+.2} dB, reference mean {worst_mean:.1e}, {windows} windows"
        ),
    )
}

fn a9_reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_cleer");
    let data = dir.path().join("data.segd");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).env_remove("CLEER_SEED").output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    let data_s = data.to_str().unwrap();
    run(&["gen-data", "--n-per-class", "20", "--t", "64", "--out", data_s]);
    let flags = ["--preset", "small", "--epochs", "3", "--seed", "3"];
    let outs = [dir.path().join("run1"), dir.path().join("run2")];
    for out in &outs {
        let mut args = vec!["train", "--data", data_s, "--out-dir", out.to_str().unwrap()];
        args.extend(flags);
        run(&args);
    }
    let m1 = fs::read(outs[0].join("metrics.csv")).unwrap();
    let identical = m1 == fs::read(outs[1].join("metrics.csv")).unwrap();

    let report: CvReport = serde_json::from_slice(&fs::read(outs[0].join("report.json")).unwrap()).unwrap();
    let set = load_segments(&data).unwrap();
    let mut exact = true;
    for fold in &report.folds {
        let model = load_checkpoint(outs[0].join(format!("fold_{}.ckpt", fold.fold_index))).unwrap();
        let acc = evaluate(&model, &set, &fold.val_indices).unwrap().accuracy;
        exact &= acc == fold.accuracy;
    }
    verdict(
        identical && exact,
        format!(
            "metrics CSV ({} bytes) identical: {identical}; checkpoint accuracies exact: {exact}",
            m1.len()
        ),
    )
}

fn main() {
    cleer::cli::prefer_heap_reuse();
    let criteria: [(&str, &str, fn() -> Verdict); 9] = [
        ("A1", "gradient integrity", a1_gradients),
        ("A2", "loss oracle equivalence", a2_oracles),
        ("A3", "analytic identities", a3_identities),
        ("A7", "augmentation statistics", a7_augmentation),
        ("A8", "signal chain", a8_signal_chain),
        ("A9", "reproducibility", a9_reproducibility),
        ("A4", "synthetic end-to-end", a4_end_to_end),
        ("A6", "channel ablation", a6_channel_ablation),
        ("A5", "joint vs baselines", a5_joint_vs_baselines),
    ];
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    let mut lines = Vec::new();
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let line = format!(
            "{id} {} {name}: {} [{:.1}s]",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
        println!("{line}");
        failures += usize::from(!v.passed);
        lines.push(line);
    }
    println!("\nacceptance summary");
    for line in &lines {
        println!("{line}");
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}

