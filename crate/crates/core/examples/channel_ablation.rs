//! Per-channel informativeness: retrain on each channel alone, or occlude all
//! but one channel of a model trained on every channel.
//!
//! cargo run --release --example channel_ablation -- [retrain|occlusion]

use cleer::ablation::{per_channel_eval, reduced_config, AblationMethod};
use cleer::data::{make_synthetic_dataset, SyntheticSpec};

fn main() -> cleer::Result<()> {
    let method: AblationMethod = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "occlusion".into())
        .parse()?;
    let set = make_synthetic_dataset(&SyntheticSpec::default())?;
    let report = per_channel_eval(&set, &reduced_config(), method)?;
    println!("ranking ({method:?}), informative channels are 2 and 5:");
    for row in report.ranked() {
        println!("  {:>3} {:6} {:.4}", row.channel_index, row.channel_name, row.mean_accuracy);
    }
    report.write_csv(std::io::stdout())?;
    Ok(())
}
