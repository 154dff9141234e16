//! Generates the three-class synthetic dataset and writes it as a segment file.
//!
//! cargo run --example synthetic_data -- [out.segd]

use cleer::data::{load_segments, make_synthetic_dataset, save_segments, SyntheticSpec};

fn main() -> cleer::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic.segd".into());
    let spec = SyntheticSpec {
        snr_db: -6.0,
        ..SyntheticSpec::default()
    };
    let set = make_synthetic_dataset(&spec)?;
    println!(
        "{} segments, T={}, C={}, class counts {:?}, signal amplitude {:.3}",
        set.len(),
        set.window_len(),
        set.n_channels(),
        set.class_counts(),
        spec.amplitude()
    );
    println!("channels: {}", set.channel_names().join(", "));

    save_segments(&set, &out)?;
    let back = load_segments(&out)?;
    assert_eq!(back, set);
    println!("wrote {out} and read it back unchanged");
    Ok(())
}
