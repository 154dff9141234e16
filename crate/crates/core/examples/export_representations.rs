//! Trains one fold, saves its checkpoint, reloads it and exports pooled
//! instance representations as CSV.
//!
//! cargo run --release --example export_representations -- [out.csv]

use cleer::ablation::{export_representations, pooled_representations};
use cleer::data::{make_synthetic_dataset, SyntheticSpec};
use cleer::model::{load_checkpoint, save_checkpoint};
use cleer::trainer::{run_skcv, TrainConfig};

fn main() -> cleer::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "representations.csv".into());
    let set = make_synthetic_dataset(&SyntheticSpec {
        n_per_class: 40,
        ..SyntheticSpec::default()
    })?;
    let config = TrainConfig {
        epochs: 5,
        k_folds: 2,
        ..TrainConfig::small()
    };
    let outcome = run_skcv(&set, &config)?;
    let ckpt = std::env::temp_dir().join("cleer_example_fold0.ckpt");
    save_checkpoint(&outcome.models[0], &ckpt)?;
    let model = load_checkpoint(&ckpt)?;

    let reprs = pooled_representations(&model, &set)?;
    // Class centroids of the first few dimensions.
    for class in 0..3u8 {
        let rows: Vec<&Vec<f64>> = reprs.iter().zip(set.labels()).filter(|(_, &l)| l == class).map(|(r, _)| r).collect();
        let centroid: Vec<String> = (0..4)
            .map(|d| format!("{:+.3}", rows.iter().map(|r| r[d]).sum::<f64>() / rows.len() as f64))
            .collect();
        println!("class {class}: centroid[..4] = [{}]", centroid.join(", "));
    }
    export_representations(&model, &set, &out)?;
    println!("wrote {} rows of {} dims to {out}", reprs.len(), reprs[0].len());
    Ok(())
}
