//! Joint training against the classifier-only and two-step baselines over several seeds.
//!
//! cargo run --release --example compare_modes -- [epochs] [n_seeds]

use cleer::data::{make_synthetic_dataset, SyntheticSpec};
use cleer::trainer::{compare_modes, TrainConfig, TrainMode};

fn main() -> cleer::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let epochs = args.next().flatten().unwrap_or(10);
    let n_seeds = args.next().flatten().unwrap_or(2) as u64;
    let set = make_synthetic_dataset(&SyntheticSpec {
        snr_db: -6.0,
        ..SyntheticSpec::default()
    })?;
    let base = TrainConfig {
        epochs,
        ..TrainConfig::small()
    };
    let seeds: Vec<u64> = (7..7 + n_seeds).collect();
    let comparison = compare_modes(&set, &base, &TrainMode::ALL, &seeds)?;
    println!("{}", comparison.table());
    Ok(())
}
