//! Joint contrastive + classification training on synthetic data with 5-fold CV.
//!
//! cargo run --release --example train_joint -- [epochs]

use std::time::Instant;

use cleer::data::{make_synthetic_dataset, SyntheticSpec};
use cleer::trainer::{run_skcv, TrainConfig};

fn main() -> cleer::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let set = make_synthetic_dataset(&SyntheticSpec::default())?;
    let config = TrainConfig {
        epochs,
        ..TrainConfig::small()
    };
    let start = Instant::now();
    let outcome = run_skcv(&set, &config)?;
    for fold in &outcome.report.folds {
        let last = fold.loss_history.last().expect("at least one epoch");
        println!(
            "fold {}: accuracy {:.4}  final hcl {:.4}  class loss {:.4}",
            fold.fold_index, fold.accuracy, last.loss.hcl, last.loss.class_loss
        );
    }
    println!(
        "mean accuracy {:.4} +/- {:.4} in {:.1?}",
        outcome.report.mean_accuracy,
        outcome.report.std_accuracy,
        start.elapsed()
    );
    Ok(())
}
