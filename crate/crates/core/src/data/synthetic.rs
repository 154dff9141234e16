use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::montage::default_channel_names;
use super::recording::DEFAULT_SAMPLE_RATE_HZ;
use super::segments::{SegmentMeta, SegmentSet, N_CLASSES};
use crate::error::{Error, Result};

/// Frequency-coded three-class task: class `k` carries a sinusoid at `class_freqs_hz[k]`
/// on the informative channels, buried in unit-variance white noise on all channels.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub t: usize,
    pub c: usize,
    pub informative: Vec<usize>,
    pub snr_db: f64,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub class_freqs_hz: [f64; N_CLASSES],
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_per_class: 200,
            t: 128,
            c: 8,
            informative: vec![2, 5],
            snr_db: 0.0,
            seed: 7,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            class_freqs_hz: [4.0, 10.0, 20.0],
        }
    }
}

impl SyntheticSpec {
    /// Sinusoid amplitude whose power `A^2 / 2` is `snr_db` above the unit noise power.
    pub fn amplitude(&self) -> f64 {
        (2.0 * 10f64.powf(self.snr_db / 10.0)).sqrt()
    }
}

/// Generates `3 * n_per_class` segments, classes interleaved `0, 1, 2, 0, ...`.
pub fn make_synthetic_dataset(spec: &SyntheticSpec) -> Result<SegmentSet> {
    if spec.informative.is_empty() {
        return Err(Error::config("synthetic data needs at least one informative channel"));
    }
    if let Some(&bad) = spec.informative.iter().find(|&&c| c >= spec.c) {
        return Err(Error::config(format!("informative channel {bad} outside [0, {})", spec.c)));
    }
    if spec.n_per_class == 0 || spec.t == 0 {
        return Err(Error::config("synthetic data needs n_per_class >= 1 and t >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let amp = spec.amplitude();
    let n = spec.n_per_class * N_CLASSES;
    let mut is_informative = vec![false; spec.c];
    for &c in &spec.informative {
        is_informative[c] = true;
    }
    let mut data = Vec::with_capacity(n * spec.t * spec.c);
    let mut labels = Vec::with_capacity(n);
    let mut segment = vec![0.0f64; spec.t * spec.c];
    for i in 0..n {
        let class = i % N_CLASSES;
        let omega = 2.0 * PI * spec.class_freqs_hz[class] / spec.sample_rate_hz;
        for v in segment.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for (c, _) in is_informative.iter().enumerate().filter(|(_, &inf)| inf) {
            let phase = rng.gen_range(0.0..2.0 * PI);
            for t in 0..spec.t {
                segment[t * spec.c + c] += amp * (omega * t as f64 + phase).sin();
            }
        }
        data.extend(segment.iter().map(|&v| v as f32));
        labels.push(class as u8);
    }
    SegmentSet::new(
        SegmentMeta {
            n,
            t: spec.t,
            c: spec.c,
            sample_rate_hz: spec.sample_rate_hz,
            window_seconds: spec.t as f64 / spec.sample_rate_hz,
            overlap_seconds: 0.0,
            labels,
            channel_names: default_channel_names(spec.c),
        },
        data,
    )
}

/// Same data with labels permuted by a seeded shuffle (a no-signal control).
pub fn shuffle_labels(set: &SegmentSet, seed: u64) -> Result<SegmentSet> {
    use rand::seq::SliceRandom;
    let mut labels = set.labels().to_vec();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    set.with_labels(labels)
}
