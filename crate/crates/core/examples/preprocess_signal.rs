//! Average reference, zero-phase bandpass and mains notch on a toy recording,
//! followed by 2 s windows with 0.2 s overlap.
//!
//! cargo run --example preprocess_signal

use std::f64::consts::PI;

use cleer::data::{segment_recording, LabelStream, Recording};
use cleer::preprocess::{preprocess_recording, PreprocessConfig};

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn main() -> cleer::Result<()> {
    let fs = 200.0;
    let n = 20 * fs as usize;
    // Each channel: a 10 Hz rhythm, 50 Hz mains hum, and a slow drift shared by all channels.
    let channels: Vec<Vec<f64>> = (0..4)
        .map(|c| {
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    (c as f64 + 1.0) * (2.0 * PI * 10.0 * t).sin() + 0.8 * (2.0 * PI * 50.0 * t).sin() + 3.0 * (0.05 * t).sin()
                })
                .collect()
        })
        .collect();
    let labels: Vec<u8> = (0..n).map(|i| (i * 3 / n) as u8).collect();
    let rec = Recording::new(channels, fs, LabelStream::PerSample(labels))?;

    let mut config = PreprocessConfig::standard(fs);
    if let Some(notch) = config.notch.as_mut() {
        notch.notch_hz = 50.0;
    }
    let clean = preprocess_recording(&rec, &config)?;
    for c in 0..rec.n_channels() {
        println!("channel {c}: rms {:.3} -> {:.3}", rms(rec.channel(c)), rms(clean.channel(c)));
    }

    let set = segment_recording(&clean, 2.0, 0.2)?;
    println!("{} windows of {} samples, class counts {:?}", set.len(), set.window_len(), set.class_counts());
    Ok(())
}
