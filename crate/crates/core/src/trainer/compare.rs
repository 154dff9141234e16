use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, TrainMode};
use super::cv::{mean_std, run_skcv, CvReport};
use crate::data::SegmentSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: TrainMode,
    /// Mean fold accuracy for each seed, in seed order.
    pub per_seed: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub seeds: Vec<u64>,
    pub modes: Vec<ModeSummary>,
    pub runs: Vec<CvReport>,
}

impl ModeComparison {
    pub fn summary(&self, mode: TrainMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    /// Plain-text table: one row per mode, mean and std over seeds.
    pub fn table(&self) -> String {
        let mut out = String::from("| mode | mean accuracy | std | per seed |\n|---|---|---|---|\n");
        for m in &self.modes {
            let seeds: Vec<String> = m.per_seed.iter().map(|a| format!("{a:.4}")).collect();
            out.push_str(&format!(
                "| {} | {:.4} | {:.4} | {} |\n",
                m.mode,
                m.mean_accuracy,
                m.std_accuracy,
                seeds.join(" ")
            ));
        }
        out
    }
}

/// Runs cross-validation for every mode and seed with otherwise identical settings.
pub fn compare_modes(set: &SegmentSet, base: &TrainConfig, modes: &[TrainMode], seeds: &[u64]) -> Result<ModeComparison> {
    if seeds.is_empty() || modes.is_empty() {
        return Err(Error::Empty("mode comparison needs at least one mode and one seed".into()));
    }
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for &mode in modes {
        let mut per_seed = Vec::new();
        for &seed in seeds {
            let cfg = TrainConfig { mode, seed, ..base.clone() };
            let report = run_skcv(set, &cfg)?.report;
            per_seed.push(report.mean_accuracy);
            runs.push(report);
        }
        let (mean_accuracy, std_accuracy) = mean_std(&per_seed);
        summaries.push(ModeSummary {
            mode,
            per_seed,
            mean_accuracy,
            std_accuracy,
        });
    }
    Ok(ModeComparison {
        seeds: seeds.to_vec(),
        modes: summaries,
        runs,
    })
}
