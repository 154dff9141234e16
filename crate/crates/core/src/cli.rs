//! Command-line front end. Every command writes a JSON run manifest next to its outputs.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::ablation::{export_representations, per_channel_eval, reduced_config, AblationMethod};
use crate::checks::gradient_suite;
use crate::data::{
    load_segments, make_synthetic_dataset, save_segments, segment_recording, LabelStream, Recording, SyntheticSpec,
    DEFAULT_OVERLAP_SECONDS, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_WINDOW_SECONDS,
};
use crate::diffcore::GradCheckOptions;
use crate::error::{Error, Result};
use crate::model::{load_checkpoint, save_checkpoint};
use crate::preprocess::{preprocess_recording, preprocess_segments, FilterKind, FilterSpec, PreprocessConfig};
use crate::trainer::{run_skcv, save_metrics, save_report, TrainConfig, TrainMode};

/// Environment variable consulted for the seed when neither a flag nor a config file sets one.
pub const SEED_ENV: &str = "CLEER_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "cleer",
    version,
    about = "Hierarchical contrastive representation learning for multichannel time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labelled segment file.
    GenData(GenDataArgs),
    /// Cross-validated training; writes metrics, fold reports and checkpoints.
    Train(TrainArgs),
    /// Per-channel accuracy ranking.
    Ablate(AblateArgs),
    /// Finite-difference check of every differentiable kernel.
    Gradcheck(GradcheckArgs),
    /// Pooled encoder representations of every segment as CSV.
    ExportReprs(ExportArgs),
    /// Re-reference, bandpass and notch a recording or segment file.
    Preprocess(PreprocessArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 200)]
    pub n_per_class: usize,
    /// Samples per segment.
    #[arg(long, default_value_t = 128)]
    pub t: usize,
    /// Channel count.
    #[arg(long, default_value_t = 8)]
    pub c: usize,
    /// Informative channel indices, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,5")]
    pub channels: Vec<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr_db: f64,
    /// [default: 7, or $CLEER_SEED]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE_HZ)]
    pub sample_rate_hz: f64,
    /// Output segment file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Training overrides. Values come from a flag, else the `--config` file,
/// else the preset; the seed additionally falls back to $CLEER_SEED before the preset.
#[derive(Debug, Args, Default, Clone)]
pub struct TrainingFlags {
    /// JSON file with any subset of the training configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// [default: 50; small preset 30; ablate 10]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// [default: 5]
    #[arg(long)]
    pub k_folds: Option<usize>,
    /// Weight of the cross-entropy term [default: 1.0]
    #[arg(long)]
    pub lambda_class: Option<f64>,
    /// Timestamp mask probability [default: 0.5]
    #[arg(long)]
    pub mask_p: Option<f64>,
    /// [default: 0; small preset and ablate 7]
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: joint]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Average the contrastive loss over both anchor views [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub symmetrize: Option<bool>,
    /// Block-wise folds instead of shuffled stratified folds [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub contiguous_folds: Option<bool>,
    /// [default: 128; small 32; ablate 16]
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// [default: 900; small 64; ablate 32]
    #[arg(long)]
    pub repr_dim: Option<usize>,
    /// [default: 5; small 3; ablate 2]
    #[arg(long)]
    pub n_blocks: Option<usize>,
    /// Classifier conv width [default: 256; small 64; ablate 32]
    #[arg(long)]
    pub conv_channels: Option<usize>,
    /// Hidden FC widths, comma separated [default: 64; ablate 32]
    #[arg(long, value_delimiter = ',')]
    pub fc_dims: Option<Vec<usize>>,
    /// Worker threads; results do not depend on it [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Joint,
    ClassifierOnly,
    TwoStep,
}

impl From<ModeArg> for TrainMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Joint => TrainMode::Joint,
            ModeArg::ClassifierOnly => TrainMode::ClassifierOnly,
            ModeArg::TwoStep => TrainMode::TwoStep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Full-size network, 50 epochs.
    Standard,
    /// hidden 32, repr 64, 3 blocks, 30 epochs, seed 7.
    Small,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Segment file to train on.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for metrics.csv, report.json, fold checkpoints and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "standard")]
    pub preset: Preset,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Retrain,
    Occlusion,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Channel report CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "retrain")]
    pub method: MethodArg,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Seed for the random check inputs [default: 0, or $CLEER_SEED]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Optional JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Pick by extension: `.csv` is a recording, anything else a segment file.
    Auto,
    Csv,
    Segd,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// CSV recording (one column per channel, optional `label` column) or segment file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output segment file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: InputFormat,
    /// Sampling rate of a CSV recording.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE_HZ)]
    pub sample_rate_hz: f64,
    /// Label for every sample of a CSV recording without a `label` column.
    #[arg(long)]
    pub label: Option<u8>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECONDS)]
    pub window_s: f64,
    #[arg(long, default_value_t = DEFAULT_OVERLAP_SECONDS)]
    pub overlap_s: f64,
    /// Skip common average re-referencing.
    #[arg(long)]
    pub no_reference: bool,
    #[arg(long)]
    pub no_bandpass: bool,
    #[arg(long)]
    pub no_notch: bool,
    #[arg(long, default_value_t = 1.0)]
    pub low_hz: f64,
    #[arg(long, default_value_t = 49.0)]
    pub high_hz: f64,
    #[arg(long, default_value_t = 60.0)]
    pub notch_hz: f64,
    /// Notch quality factor.
    #[arg(long, default_value_t = 30.0)]
    pub q: f64,
    /// Order of each Butterworth edge.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to replay a command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_seconds: f64,
    pub version: &'static str,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// `<path>.manifest.json` beside a single output file.
fn manifest_beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

struct Outcome {
    config: Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest: PathBuf,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies config-file values, then $CLEER_SEED, then flags over `base`.
pub fn resolve_config(base: TrainConfig, flags: &TrainingFlags) -> Result<TrainConfig> {
    let mut value = serde_json::to_value(&base)?;
    let mut file_sets_seed = false;
    if let Some(path) = &flags.config {
        let file: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if !file.is_object() {
            return Err(Error::config(format!("{} must hold a JSON object", path.display())));
        }
        file_sets_seed = file.get("seed").is_some();
        merge(&mut value, file);
    }
    let mut cfg: TrainConfig =
        serde_json::from_value(value).map_err(|e| Error::config(format!("configuration file: {e}")))?;
    if !file_sets_seed {
        if let Some(seed) = env_seed()? {
            cfg.seed = seed;
        }
    }
    let f = flags.clone();
    macro_rules! set {
        ($($field:ident).+ <- $flag:expr) => {
            if let Some(v) = $flag {
                cfg.$($field).+ = v.into();
            }
        };
    }
    set!(epochs <- f.epochs);
    set!(lr <- f.lr);
    set!(batch_size <- f.batch_size);
    set!(k_folds <- f.k_folds);
    set!(lambda_class <- f.lambda_class);
    set!(mask_p <- f.mask_p);
    set!(seed <- f.seed);
    set!(mode <- f.mode);
    set!(symmetrize <- f.symmetrize);
    set!(contiguous_folds <- f.contiguous_folds);
    set!(dims.hidden_dim <- f.hidden_dim);
    set!(dims.repr_dim <- f.repr_dim);
    set!(dims.n_blocks <- f.n_blocks);
    set!(dims.conv_channels <- f.conv_channels);
    set!(dims.fc_dims <- f.fc_dims);
    set!(jobs <- f.jobs);
    cfg.validate()?;
    Ok(cfg)
}

fn gen_data(a: &GenDataArgs) -> Result<Outcome> {
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(SyntheticSpec::default().seed),
    };
    let spec = SyntheticSpec {
        n_per_class: a.n_per_class,
        t: a.t,
        c: a.c,
        informative: a.channels.clone(),
        snr_db: a.snr_db,
        seed,
        sample_rate_hz: a.sample_rate_hz,
        ..SyntheticSpec::default()
    };
    let set = make_synthetic_dataset(&spec)?;
    save_segments(&set, &a.out)?;
    println!("wrote {} segments ({} x {}) to {}", set.len(), set.window_len(), set.n_channels(), a.out.display());
    Ok(Outcome {
        config: serde_json::to_value(&spec)?,
        seed: Some(seed),
        inputs: vec![],
        outputs: vec![a.out.clone()],
        manifest: manifest_beside(&a.out),
    })
}

fn train(a: &TrainArgs) -> Result<Outcome> {
    let base = match a.preset {
        Preset::Standard => TrainConfig::default(),
        Preset::Small => TrainConfig::small(),
    };
    let cfg = resolve_config(base, &a.training)?;
    let set = load_segments(&a.data)?;
    let outcome = run_skcv(&set, &cfg)?;
    fs::create_dir_all(&a.out_dir)?;
    let metrics = a.out_dir.join("metrics.csv");
    let report = a.out_dir.join("report.json");
    save_metrics(&metrics, &outcome.report)?;
    save_report(&report, &outcome.report)?;
    let mut outputs = vec![metrics, report];
    for (k, model) in outcome.models.iter().enumerate() {
        let path = a.out_dir.join(format!("fold_{k}.ckpt"));
        save_checkpoint(model, &path)?;
        outputs.push(path);
    }
    for f in &outcome.report.folds {
        println!("fold {}: accuracy {:.4}", f.fold_index, f.accuracy);
    }
    println!(
        "{} mean accuracy {:.4} (std {:.4}) over {} folds",
        cfg.mode, outcome.report.mean_accuracy, outcome.report.std_accuracy, outcome.report.k_folds
    );
    Ok(Outcome {
        config: serde_json::to_value(&cfg)?,
        seed: Some(cfg.seed),
        inputs: vec![a.data.clone()],
        outputs,
        manifest: a.out_dir.join("manifest.json"),
    })
}

fn ablate(a: &AblateArgs) -> Result<Outcome> {
    let cfg = resolve_config(reduced_config(), &a.training)?;
    let method = match a.method {
        MethodArg::Retrain => AblationMethod::Retrain,
        MethodArg::Occlusion => AblationMethod::Occlusion,
    };
    let set = load_segments(&a.data)?;
    let report = per_channel_eval(&set, &cfg, method)?;
    report.save_csv(&a.out)?;
    for (rank, row) in report.ranked().iter().enumerate() {
        println!("{:>3}. channel {:>3} {:<6} {:.4}", rank + 1, row.channel_index, row.channel_name, row.mean_accuracy);
    }
    let mut config = serde_json::to_value(&cfg)?;
    config["method"] = serde_json::to_value(method)?;
    Ok(Outcome {
        config,
        seed: Some(cfg.seed),
        inputs: vec![a.data.clone()],
        outputs: vec![a.out.clone()],
        manifest: manifest_beside(&a.out),
    })
}

fn gradcheck(a: &GradcheckArgs) -> Result<Outcome> {
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let opts = GradCheckOptions {
        eps: a.eps,
        tol_rel: a.tol,
        ..GradCheckOptions::default()
    };
    let checks = gradient_suite(seed, opts)?;
    for c in &checks {
        println!(
            "{:<34} {}  max rel err {:.3e} over {} elements",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.max_rel_error,
            c.checked
        );
    }
    let mut outputs = vec![];
    if let Some(out) = &a.out {
        fs::write(out, serde_json::to_vec_pretty(&checks)?)?;
        outputs.push(out.clone());
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(Error::Contract(format!("gradient check failed for {}", failed.join(", "))));
    }
    println!("all {} checks passed", checks.len());
    let manifest = a.out.as_deref().map_or_else(|| PathBuf::from("gradcheck.manifest.json"), manifest_beside);
    Ok(Outcome {
        config: serde_json::json!({ "eps": a.eps, "tol": a.tol }),
        seed: Some(seed),
        inputs: vec![],
        outputs,
        manifest,
    })
}

fn export_reprs(a: &ExportArgs) -> Result<Outcome> {
    let model = load_checkpoint(&a.checkpoint)?;
    let set = load_segments(&a.data)?;
    export_representations(&model, &set, &a.out)?;
    println!("wrote {} representations of width {} to {}", set.len(), model.encoder.repr_dim, a.out.display());
    Ok(Outcome {
        config: Value::Null,
        seed: None,
        inputs: vec![a.checkpoint.clone(), a.data.clone()],
        outputs: vec![a.out.clone()],
        manifest: manifest_beside(&a.out),
    })
}

/// Reads a CSV recording: one numeric column per channel plus an optional `label` column.
pub fn read_csv_recording(path: &Path, sample_rate_hz: f64, label: Option<u8>) -> Result<Recording> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_col = headers.iter().position(|h| h == "label");
    let names: Vec<String> = headers.iter().filter(|h| *h != "label").cloned().collect();
    let mut channels = vec![Vec::new(); names.len()];
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut ch = 0;
        for (col, field) in record.iter().enumerate() {
            let bad = || Error::format("CSV", row as u64 + 2, format!("column {col}: {field:?} is not a number"));
            if Some(col) == label_col {
                labels.push(field.trim().parse::<u8>().map_err(|_| bad())?);
            } else {
                channels[ch].push(field.trim().parse::<f64>().map_err(|_| bad())?);
                ch += 1;
            }
        }
    }
    let stream = match (label_col, label) {
        (Some(_), _) => LabelStream::PerSample(labels),
        (None, Some(l)) => LabelStream::Whole(l),
        (None, None) => {
            return Err(Error::config("recording has no label column; pass --label"));
        }
    };
    let mut rec = Recording::new(channels, sample_rate_hz, stream)?;
    rec.channel_names = names;
    Ok(rec)
}

fn preprocess(a: &PreprocessArgs) -> Result<Outcome> {
    let is_csv = match a.format {
        InputFormat::Csv => true,
        InputFormat::Segd => false,
        InputFormat::Auto => a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    };
    let filter = |kind, fs| FilterSpec {
        kind,
        low_hz: a.low_hz,
        high_hz: a.high_hz,
        notch_hz: a.notch_hz,
        q: a.q,
        order: a.order,
        sample_rate_hz: fs,
    };
    let config_for = |fs| PreprocessConfig {
        average_reference: !a.no_reference,
        bandpass: (!a.no_bandpass).then(|| filter(FilterKind::Bandpass, fs)),
        notch: (!a.no_notch).then(|| filter(FilterKind::Notch, fs)),
    };
    let (set, fs) = if is_csv {
        let rec = read_csv_recording(&a.input, a.sample_rate_hz, a.label)?;
        let clean = preprocess_recording(&rec, &config_for(a.sample_rate_hz))?;
        (segment_recording(&clean, a.window_s, a.overlap_s)?, a.sample_rate_hz)
    } else {
        let raw = load_segments(&a.input)?;
        let fs = raw.sample_rate_hz;
        (preprocess_segments(&raw, &config_for(fs))?, fs)
    };
    save_segments(&set, &a.out)?;
    println!("wrote {} preprocessed segments to {}", set.len(), a.out.display());
    let cfg = config_for(fs);
    Ok(Outcome {
        config: serde_json::json!({
            "input_kind": if is_csv { "csv_recording" } else { "segments" },
            "average_reference": cfg.average_reference,
            "bandpass": cfg.bandpass.map(|f| serde_json::json!({"low_hz": f.low_hz, "high_hz": f.high_hz, "order": f.order})),
            "notch": cfg.notch.map(|f| serde_json::json!({"notch_hz": f.notch_hz, "q": f.q})),
            "sample_rate_hz": fs,
            "window_s": a.window_s,
            "overlap_s": a.overlap_s,
        }),
        seed: None,
        inputs: vec![a.input.clone()],
        outputs: vec![a.out.clone()],
        manifest: manifest_beside(&a.out),
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::GenData(_) => "gen-data",
        Command::Train(_) => "train",
        Command::Ablate(_) => "ablate",
        Command::Gradcheck(_) => "gradcheck",
        Command::ExportReprs(_) => "export-reprs",
        Command::Preprocess(_) => "preprocess",
    }
}

/// Runs a parsed command and writes its manifest.
pub fn execute(cli: &Cli, args: &[String]) -> Result<()> {
    let start = Instant::now();
    let out = match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Ablate(a) => ablate(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::ExportReprs(a) => export_reprs(a),
        Command::Preprocess(a) => preprocess(a),
    }?;
    let manifest = RunManifest {
        command: command_name(&cli.command).to_string(),
        args: args.to_vec(),
        config: out.config,
        seed: out.seed,
        inputs: digests(&out.inputs)?,
        outputs: digests(&out.outputs)?,
        duration_seconds: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
    };
    fs::write(&out.manifest, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

/// Keeps freed training buffers in the heap instead of returning them to the
/// OS after every step; each step allocates and drops the same large tensors.
/// Process-wide, so only executables call it.
pub fn prefer_heap_reuse() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: mallopt only adjusts allocator thresholds and is called before any threads start.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 32 << 20);
        libc::mallopt(libc::M_TRIM_THRESHOLD, 512 << 20);
    }
}

/// Process exit code for an error: 2 usage, 3 data format, 4 numeric contract, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Format { .. } | Error::Csv(_) => 3,
        Error::Contract(_) => 4,
        _ => 1,
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
}

/// Parses `args` (including the program name), runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            report_error("usage", e.render().to_string().trim());
            return 2;
        }
    };
    let text: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &text) {
        Ok(()) => 0,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file_which_overrides_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"epochs": 3, "lr": 0.01, "dims": {"hidden_dim": 16}}"#).unwrap();
        let flags = TrainingFlags {
            config: Some(path.clone()),
            epochs: Some(4),
            seed: Some(9),
            ..TrainingFlags::default()
        };
        let cfg = resolve_config(TrainConfig::small(), &flags).unwrap();
        assert_eq!(cfg.epochs, 4);
        assert_eq!(cfg.lr, 0.01);
        assert_eq!(cfg.dims.hidden_dim, 16);
        assert_eq!(cfg.dims.repr_dim, 64);
        assert_eq!(cfg.seed, 9);
        fs::write(&path, r#"{"epoch": 3}"#).unwrap();
        assert!(matches!(resolve_config(TrainConfig::small(), &flags), Err(Error::Config(_))));
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["cleer", "train", "--bogus"]), 2);
        assert_eq!(run(["cleer"]), 2);
        assert_eq!(run(["cleer", "--help"]), 0);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::config("x")), 2);
        assert_eq!(exit_code(&Error::format("SEGD", 0, "x")), 3);
        assert_eq!(exit_code(&Error::Contract("x".into())), 4);
        assert_eq!(exit_code(&Error::Empty("x".into())), 1);
    }
}
