use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, TrainMode};
use super::evaluate::evaluate;
use super::step::{optimizer_for, train_step, StepPlan, StepSettings};
use crate::data::{contiguous_kfold, stratified_kfold, FoldSplit, SegmentSet, N_CLASSES};
use crate::error::{Error, Result};
use crate::losses::{ContrastOptions, LevelLoss, LossBreakdown};
use crate::model::Model;

/// Independent random streams for one fold.
const STREAM_INIT: u64 = 0;
const STREAM_ORDER: u64 = 1;
const STREAM_AUGMENT: u64 = 2;

/// A seeded generator for `(seed, fold, purpose)`; streams never overlap.
pub fn fold_rng(seed: u64, fold: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((fold as u64) << 8) | purpose);
    rng
}

/// Mean losses over one epoch plus validation accuracy after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub fold: usize,
    /// 1-based, continuous across the phases of two-step training.
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub n_train: usize,
    pub n_val: usize,
    /// Validation segment indices, so a saved model can be re-scored on the same split.
    pub val_indices: Vec<usize>,
    pub accuracy: f64,
    pub confusion_matrix: [[usize; N_CLASSES]; N_CLASSES],
    pub loss_history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mode: TrainMode,
    pub seed: u64,
    pub k_folds: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub folds: Vec<FoldReport>,
}

impl CvReport {
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.accuracy).collect()
    }

    pub fn epoch_records(&self) -> impl Iterator<Item = &EpochRecord> {
        self.folds.iter().flat_map(|f| &f.loss_history)
    }
}

/// Report plus the trained model of every fold, in fold order.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: CvReport,
    pub models: Vec<Model>,
}

fn mean_breakdown(steps: &[LossBreakdown]) -> LossBreakdown {
    let n = steps.len().max(1) as f64;
    let depth = steps.iter().map(|s| s.per_level.len()).max().unwrap_or(0);
    let per_level = (0..depth)
        .map(|level| {
            let at: Vec<&LevelLoss> = steps.iter().filter_map(|s| s.per_level.get(level)).collect();
            let m = at.len() as f64;
            LevelLoss {
                level,
                length: (at.iter().map(|l| l.length as f64).sum::<f64>() / m).round() as usize,
                tcl: at.iter().map(|l| l.tcl).sum::<f64>() / m,
                icl: at.iter().map(|l| l.icl).sum::<f64>() / m,
                dcl: at.iter().map(|l| l.dcl).sum::<f64>() / m,
            }
        })
        .collect();
    LossBreakdown {
        per_level,
        hcl: steps.iter().map(|s| s.hcl).sum::<f64>() / n,
        class_loss: steps.iter().map(|s| s.class_loss).sum::<f64>() / n,
        total: steps.iter().map(|s| s.total).sum::<f64>() / n,
    }
}

/// Training batches for one epoch: shuffled, last partial batch dropped.
/// A training set smaller than one batch becomes a single batch.
pub fn epoch_batches<R: rand::Rng + ?Sized>(train: &[usize], batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order = train.to_vec();
    order.shuffle(rng);
    if order.len() < batch_size {
        return vec![order];
    }
    order.chunks_exact(batch_size).map(<[usize]>::to_vec).collect()
}

struct FoldRun<'a> {
    set: &'a SegmentSet,
    train: Vec<usize>,
    val: Vec<usize>,
    fold: usize,
    config: &'a TrainConfig,
    order_rng: ChaCha8Rng,
    aug_rng: ChaCha8Rng,
    history: Vec<EpochRecord>,
}

impl FoldRun<'_> {
    fn phase(&mut self, model: &mut Model, plan: StepPlan, epochs: usize) -> Result<()> {
        let settings = StepSettings {
            lambda_class: self.config.lambda_class,
            mask_p: self.config.mask_p,
            contrast: ContrastOptions {
                symmetrize: self.config.symmetrize,
            },
        };
        let mut optimizer = optimizer_for(model, &plan, self.config.lr);
        for _ in 0..epochs {
            let mut steps = Vec::new();
            for batch in epoch_batches(&self.train, self.config.batch_size, &mut self.order_rng) {
                let x = self.set.batch(&batch);
                let y = self.set.batch_labels(&batch);
                steps.push(train_step(model, &mut optimizer, &plan, &x, &y, &settings, &mut self.aug_rng)?);
            }
            let val_accuracy = evaluate(model, self.set, &self.val)?.accuracy;
            self.history.push(EpochRecord {
                fold: self.fold,
                epoch: self.history.len() + 1,
                loss: mean_breakdown(&steps),
                val_accuracy,
            });
        }
        Ok(())
    }
}

fn check_disjoint(n: usize, train: &[usize], val: &[usize]) -> Result<()> {
    let mut in_val = vec![false; n];
    for &i in val {
        in_val[i] = true;
    }
    if let Some(&i) = train.iter().find(|&&i| in_val[i]) {
        return Err(Error::Contract(format!("segment {i} is in both train and validation")));
    }
    Ok(())
}

/// Trains a fresh model on every fold but `fold` and evaluates on `fold`.
pub fn run_fold(set: &SegmentSet, split: &FoldSplit, fold: usize, config: &TrainConfig) -> Result<(FoldReport, Model)> {
    config.validate()?;
    if fold >= split.k {
        return Err(Error::Index(format!("fold {fold} of {}", split.k)));
    }
    let train = split.train_indices(fold);
    let val = split.val_indices(fold);
    if train.is_empty() || val.is_empty() {
        return Err(Error::Empty(format!("fold {fold} has an empty train or validation set")));
    }
    check_disjoint(set.len(), &train, &val)?;

    let mut init_rng = fold_rng(config.seed, fold, STREAM_INIT);
    let mut model = Model::new(
        config.dims.encoder(set.n_channels()),
        config.dims.classifier(),
        &mut init_rng,
    )?;
    let mut run = FoldRun {
        set,
        train,
        val,
        fold,
        config,
        order_rng: fold_rng(config.seed, fold, STREAM_ORDER),
        aug_rng: fold_rng(config.seed, fold, STREAM_AUGMENT),
        history: Vec::new(),
    };
    match config.mode {
        TrainMode::Joint => run.phase(&mut model, StepPlan::joint(), config.epochs)?,
        TrainMode::ClassifierOnly => run.phase(&mut model, StepPlan::classifier_only(), config.epochs)?,
        TrainMode::TwoStep => {
            let first = config.epochs / 2;
            run.phase(&mut model, StepPlan::pretrain_encoder(), first)?;
            run.phase(&mut model, StepPlan::frozen_encoder(), config.epochs - first)?;
        }
    }
    let eval = evaluate(&model, set, &run.val)?;
    let report = FoldReport {
        fold_index: fold,
        n_train: run.train.len(),
        n_val: run.val.len(),
        val_indices: run.val.clone(),
        accuracy: eval.accuracy,
        confusion_matrix: eval.confusion,
        loss_history: run.history,
    };
    Ok((report, model))
}

pub fn make_split(set: &SegmentSet, config: &TrainConfig) -> Result<FoldSplit> {
    if config.contiguous_folds {
        contiguous_kfold(set.labels(), config.k_folds)
    } else {
        stratified_kfold(set.labels(), config.k_folds, config.seed)
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Stratified k-fold cross-validation; folds run on `config.jobs` threads
/// with results identical to a sequential run.
pub fn run_skcv(set: &SegmentSet, config: &TrainConfig) -> Result<CvOutcome> {
    config.validate()?;
    let split = make_split(set, config)?;
    let run = |fold| run_fold(set, &split, fold, config);
    let results: Vec<Result<(FoldReport, Model)>> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(|| (0..split.k).into_par_iter().map(run).collect())
    } else {
        (0..split.k).map(run).collect()
    };
    let (folds, models): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let accs: Vec<f64> = folds.iter().map(|f: &FoldReport| f.accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&accs);
    Ok(CvOutcome {
        report: CvReport {
            mode: config.mode,
            seed: config.seed,
            k_folds: split.k,
            mean_accuracy,
            std_accuracy,
            folds,
        },
        models,
    })
}
