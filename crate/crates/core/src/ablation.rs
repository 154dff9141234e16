//! Per-channel importance and representation export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SegmentSet;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::trainer::{evaluate, make_split, mean_std, run_skcv, ModelDims, TrainConfig, EVAL_BATCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMethod {
    /// Train and cross-validate a fresh single-channel model per channel.
    Retrain,
    /// Train one model per fold on all channels, then score each channel alone
    /// by zeroing every other channel of the validation data.
    Occlusion,
}

impl std::str::FromStr for AblationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "retrain" => Ok(AblationMethod::Retrain),
            "occlusion" => Ok(AblationMethod::Occlusion),
            other => Err(Error::config(format!("unknown ablation method {other:?}; expected retrain or occlusion"))),
        }
    }
}

/// Reduced training settings for per-channel runs: 10 epochs, hidden 16, repr 32, 2 blocks.
pub fn reduced_config() -> TrainConfig {
    TrainConfig {
        epochs: 10,
        seed: 7,
        dims: ModelDims {
            hidden_dim: 16,
            repr_dim: 32,
            n_blocks: 2,
            conv_channels: 32,
            fc_dims: vec![32],
        },
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRow {
    pub channel_index: usize,
    pub channel_name: String,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub method: AblationMethod,
    /// One row per channel, in channel order.
    pub rows: Vec<ChannelRow>,
}

impl ChannelReport {
    /// Rows by descending accuracy; ties keep channel order.
    pub fn ranked(&self) -> Vec<&ChannelRow> {
        let mut rows: Vec<&ChannelRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.mean_accuracy.total_cmp(&a.mean_accuracy));
        rows
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["channel_index", "channel_name", "mean_accuracy"])?;
        for r in &self.rows {
            w.write_record([r.channel_index.to_string(), r.channel_name.clone(), r.mean_accuracy.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }
}

fn retrain_channel(set: &SegmentSet, channel: usize, config: &TrainConfig) -> Result<ChannelRow> {
    let single = set.select_channels(&[channel])?;
    let report = run_skcv(&single, config)?.report;
    Ok(ChannelRow {
        channel_index: channel,
        channel_name: set.channel_names()[channel].clone(),
        mean_accuracy: report.mean_accuracy,
        fold_accuracies: report.fold_accuracies(),
    })
}

/// Copy of `set` with every channel except `keep` set to zero.
fn isolate_channel(set: &SegmentSet, keep: usize) -> Result<SegmentSet> {
    let c = set.n_channels();
    let data = set
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| if i % c == keep { v } else { 0.0 })
        .collect();
    set.with_data(data)
}

fn occlusion(set: &SegmentSet, config: &TrainConfig) -> Result<Vec<ChannelRow>> {
    let outcome = run_skcv(set, config)?;
    let split = make_split(set, config)?;
    (0..set.n_channels())
        .map(|ch| {
            let isolated = isolate_channel(set, ch)?;
            let accs = outcome
                .models
                .iter()
                .enumerate()
                .map(|(fold, m)| Ok(evaluate(m, &isolated, &split.val_indices(fold))?.accuracy))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ChannelRow {
                channel_index: ch,
                channel_name: set.channel_names()[ch].clone(),
                mean_accuracy: mean_std(&accs).0,
                fold_accuracies: accs,
            })
        })
        .collect()
}

/// Accuracy attributable to each channel. All runs share one fold assignment,
/// so per-channel numbers are directly comparable. With `config.jobs > 1`,
/// channels run in parallel; results do not depend on the thread count.
pub fn per_channel_eval(set: &SegmentSet, config: &TrainConfig, method: AblationMethod) -> Result<ChannelReport> {
    if set.n_channels() < 1 {
        return Err(Error::Empty("dataset without channels".into()));
    }
    config.validate()?;
    let rows = match method {
        AblationMethod::Retrain if config.jobs > 1 => {
            let inner = TrainConfig { jobs: 1, ..config.clone() };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.jobs)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..set.n_channels())
                    .into_par_iter()
                    .map(|c| retrain_channel(set, c, &inner))
                    .collect::<Result<Vec<_>>>()
            })?
        }
        AblationMethod::Retrain => (0..set.n_channels())
            .map(|c| retrain_channel(set, c, config))
            .collect::<Result<Vec<_>>>()?,
        AblationMethod::Occlusion => occlusion(set, config)?,
    };
    Ok(ChannelReport { method, rows })
}

/// Global max over time of the encoder output, one `repr_dim` row per segment.
pub fn pooled_representations(model: &Model, set: &SegmentSet) -> Result<Vec<Vec<f64>>> {
    if set.n_channels() != model.encoder.in_channels {
        return Err(Error::shape("export input channels", &[model.encoder.in_channels], &[set.n_channels()]));
    }
    let indices: Vec<usize> = (0..set.len()).collect();
    let d = model.encoder.repr_dim;
    let mut rows = Vec::with_capacity(set.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let r: Tensor = model.encode_tensor(&set.batch(chunk))?;
        let l = r.shape()[1];
        for item in r.data().chunks(l * d) {
            let mut pooled = vec![f64::NEG_INFINITY; d];
            for step in item.chunks(d) {
                for (p, &v) in pooled.iter_mut().zip(step) {
                    *p = p.max(v);
                }
            }
            rows.push(pooled);
        }
    }
    Ok(rows)
}

/// CSV with columns `segment_index, label, r_0 .. r_{D-1}`.
pub fn write_representations<W: Write>(model: &Model, set: &SegmentSet, writer: W) -> Result<()> {
    let rows = pooled_representations(model, set)?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["segment_index".to_string(), "label".to_string()];
    header.extend((0..model.encoder.repr_dim).map(|k| format!("r_{k}")));
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string(), set.labels()[i].to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_representations(model: &Model, set: &SegmentSet, path: impl AsRef<Path>) -> Result<()> {
    write_representations(model, set, BufWriter::new(File::create(path)?))
}
