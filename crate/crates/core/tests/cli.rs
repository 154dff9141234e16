use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cleer::data::load_segments;

fn cleer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cleer"))
        .args(args)
        .env_remove("CLEER_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cleer(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY: [&str; 14] = [
    "--epochs", "2", "--batch-size", "8", "--k-folds", "3", "--hidden-dim", "6", "--repr-dim", "8", "--n-blocks", "2",
    "--conv-channels", "6",
];

fn gen_tiny(path: &Path) {
    ok(&["gen-data", "--n-per-class", "8", "--t", "24", "--c", "3", "--channels", "1", "--snr-db", "10", "--out", p(path)]);
}

#[test]
fn generated_data_is_reproducible_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.segd"), dir.path().join("b.segd"));
    ok(&["gen-data", "--n-per-class", "5", "--seed", "3", "--out", p(&a)]);
    ok(&["gen-data", "--n-per-class", "5", "--seed", "3", "--out", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let set = load_segments(&a).unwrap();
    assert_eq!((set.len(), set.window_len(), set.n_channels()), (15, 128, 8));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a.segd.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "gen-data");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.segd"), dir.path().join("b.segd"));
    let run = |path: &Path, seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_cleer"))
            .args(["gen-data", "--n-per-class", "2", "--out", p(path)])
            .env("CLEER_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    run(&a, "11");
    run(&b, "11");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    run(&b, "12");
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn training_twice_gives_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.segd");
    gen_tiny(&data);
    let (o1, o2) = (dir.path().join("r1"), dir.path().join("r2"));
    for out in [&o1, &o2] {
        let mut args = vec!["train", "--data", p(&data), "--out-dir", p(out), "--seed", "4"];
        args.extend(TINY);
        let stdout = ok(&args);
        assert!(stdout.contains("mean accuracy"));
    }
    let m1 = fs::read(o1.join("metrics.csv")).unwrap();
    assert_eq!(m1, fs::read(o2.join("metrics.csv")).unwrap());
    assert!(String::from_utf8(m1).unwrap().starts_with("epoch,fold,level_losses,hcl,class_loss,total,val_accuracy\n"));
    for k in 0..3 {
        assert!(o1.join(format!("fold_{k}.ckpt")).exists());
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(o1.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    assert!(o1.join("manifest.json").exists());
}

#[test]
fn truncated_data_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.segd");
    gen_tiny(&data);
    let bytes = fs::read(&data).unwrap();
    fs::write(&data, &bytes[..bytes.len() - 10]).unwrap();
    let out = cleer(&["train", "--data", p(&data), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "format");
    assert!(err["message"].as_str().unwrap().contains("byte"));
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let out = cleer(&["train", "--epochs", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "usage");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.segd");
    gen_tiny(&data);
    let out = cleer(&["train", "--data", p(&data), "--out-dir", p(&dir.path().join("o")), "--batch-size", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = cleer(&["train", "--data", p(&dir.path().join("nope.segd")), "--out-dir", p(dir.path())]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn help_lists_flags_with_defaults() {
    let help = ok(&["train", "--help"]);
    for flag in ["--epochs", "--lr", "--batch-size", "--k-folds", "--lambda-class", "--mask-p", "--seed", "--mode", "--jobs", "--config"] {
        assert!(help.contains(flag), "{flag} missing");
    }
    assert!(help.contains("default"));
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let stdout = ok(&["gradcheck", "--out", p(&out)]);
    assert!(stdout.contains("checks passed"));
    let strict = cleer(&["gradcheck", "--tol", "1e-30"]);
    assert_eq!(strict.status.code(), Some(4));
}

#[test]
fn export_and_ablate_write_expected_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.segd");
    gen_tiny(&data);
    let run = dir.path().join("run");
    let mut args = vec!["train", "--data", p(&data), "--out-dir", p(&run)];
    args.extend(TINY);
    ok(&args);
    let ckpt = run.join("fold_0.ckpt");
    let (e1, e2) = (dir.path().join("e1.csv"), dir.path().join("e2.csv"));
    ok(&["export-reprs", "--checkpoint", p(&ckpt), "--data", p(&data), "--out", p(&e1)]);
    ok(&["export-reprs", "--checkpoint", p(&ckpt), "--data", p(&data), "--out", p(&e2)]);
    let text = fs::read_to_string(&e1).unwrap();
    assert_eq!(text, fs::read_to_string(&e2).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 24 + 1);
    assert!(lines.iter().all(|l| l.split(',').count() == 8 + 2));

    let report = dir.path().join("channels.csv");
    let mut args = vec!["ablate", "--data", p(&data), "--out", p(&report)];
    args.extend(TINY);
    ok(&args);
    let rows = fs::read_to_string(&report).unwrap();
    assert!(rows.starts_with("channel_index,channel_name,mean_accuracy\n"));
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn preprocess_reads_recordings_and_segment_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rec.csv");
    let mut text = String::from("Fz,Cz,label\n");
    for i in 0..1000 {
        let t = i as f64 / 200.0;
        let v = (2.0 * std::f64::consts::PI * 10.0 * t).sin();
        text.push_str(&format!("{},{},{}\n", v, 0.5 * v + 1.0, usize::from(i >= 500)));
    }
    fs::write(&csv, text).unwrap();
    let out = dir.path().join("rec.segd");
    ok(&["preprocess", "--input", p(&csv), "--out", p(&out)]);
    let set = load_segments(&out).unwrap();
    // 1000 samples, 400-sample windows, stride 360.
    assert_eq!(set.len(), 2);
    assert_eq!(set.channel_names(), &["Fz".to_string(), "Cz".to_string()]);
    assert_eq!(set.labels(), &[0, 1]);

    let raw = dir.path().join("raw.segd");
    gen_tiny(&raw);
    let clean = dir.path().join("clean.segd");
    ok(&["preprocess", "--input", p(&raw), "--out", p(&clean), "--no-reference"]);
    let (a, b) = (load_segments(&raw).unwrap(), load_segments(&clean).unwrap());
    assert_eq!(a.len(), b.len());
    assert_ne!(a.data(), b.data());

    fs::write(&csv, "Fz,Cz\n1,2\nx,3\n").unwrap();
    let bad = cleer(&["preprocess", "--input", p(&csv), "--out", p(&out), "--label", "0"]);
    assert_eq!(bad.status.code(), Some(3));
}
