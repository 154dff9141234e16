//! Cross-validated training in joint, classifier-only and two-step modes.

mod compare;
mod config;
mod cv;
mod evaluate;
mod metrics;
mod step;

pub use compare::{compare_modes, ModeComparison, ModeSummary};
pub use config::{ModelDims, TrainConfig, TrainMode};
pub use cv::{
    epoch_batches, fold_rng, make_split, mean_std, run_fold, run_skcv, CvOutcome, CvReport, EpochRecord, FoldReport,
};
pub use evaluate::{argmax, evaluate, predict, Evaluation, EVAL_BATCH};
pub use metrics::{save_metrics, save_report, write_metrics, METRICS_HEADER};
pub use step::{optimizer_for, train_step, StepPlan, StepSettings};
