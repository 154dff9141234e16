use super::montage::default_channel_names;
use super::segments::{SegmentMeta, SegmentSet, N_CLASSES};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 200.0;
pub const DEFAULT_WINDOW_SECONDS: f64 = 2.0;
pub const DEFAULT_OVERLAP_SECONDS: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum LabelStream {
    PerSample(Vec<u8>),
    Whole(u8),
}

/// A continuous multichannel recording before segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    /// `C x S`, channel-major.
    signal: Vec<f64>,
    n_channels: usize,
    pub sample_rate_hz: f64,
    labels: LabelStream,
    pub subject_id: u32,
    pub session_id: u32,
    pub channel_names: Vec<String>,
}

impl Recording {
    /// Builds a recording from per-channel sample rows.
    pub fn new(channels: Vec<Vec<f64>>, sample_rate_hz: f64, labels: LabelStream) -> Result<Self> {
        let n_channels = channels.len();
        if n_channels == 0 {
            return Err(Error::Empty("recording without channels".into()));
        }
        let s = channels[0].len();
        if s == 0 {
            return Err(Error::Empty("recording without samples".into()));
        }
        if let Some(bad) = channels.iter().find(|c| c.len() != s) {
            return Err(Error::shape("recording channels", &[s], &[bad.len()]));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::config(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        match &labels {
            LabelStream::PerSample(l) if l.len() != s => {
                return Err(Error::shape("label stream", &[s], &[l.len()]));
            }
            LabelStream::PerSample(l) => {
                if let Some(bad) = l.iter().find(|&&v| v as usize >= N_CLASSES) {
                    return Err(Error::Index(format!("label {bad} outside {{0, 1, 2}}")));
                }
            }
            LabelStream::Whole(v) if *v as usize >= N_CLASSES => {
                return Err(Error::Index(format!("label {v} outside {{0, 1, 2}}")));
            }
            LabelStream::Whole(_) => {}
        }
        Ok(Recording {
            signal: channels.concat(),
            n_channels,
            sample_rate_hz,
            labels,
            subject_id: 0,
            session_id: 0,
            channel_names: default_channel_names(n_channels),
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.signal.len() / self.n_channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let s = self.n_samples();
        &self.signal[c * s..(c + 1) * s]
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        self.signal.chunks_exact(self.n_samples())
    }

    pub fn labels(&self) -> &LabelStream {
        &self.labels
    }

    /// Replaces the signal with a same-shaped one (used by the filter chain).
    pub fn with_channels(&self, channels: Vec<Vec<f64>>) -> Result<Self> {
        if channels.len() != self.n_channels || channels.iter().any(|c| c.len() != self.n_samples()) {
            return Err(Error::shape(
                "recording channels",
                &[self.n_channels, self.n_samples()],
                &[channels.len()],
            ));
        }
        Ok(Recording {
            signal: channels.concat(),
            ..self.clone()
        })
    }

    fn label_at_window(&self, start: usize, len: usize) -> u8 {
        match &self.labels {
            LabelStream::Whole(l) => *l,
            LabelStream::PerSample(stream) => majority_label(&stream[start..start + len]),
        }
    }
}

/// Most frequent label; ties go to the tied label seen first.
fn majority_label(window: &[u8]) -> u8 {
    let mut counts = [0usize; N_CLASSES];
    let mut first_seen = [usize::MAX; N_CLASSES];
    for (i, &l) in window.iter().enumerate() {
        counts[l as usize] += 1;
        first_seen[l as usize] = first_seen[l as usize].min(i);
    }
    (0..N_CLASSES)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(first_seen[b].cmp(&first_seen[a])))
        .unwrap() as u8
}

/// Start sample of each window: `floor((S - T) / stride) + 1` of them.
pub fn window_starts(n_samples: usize, window: usize, stride: usize) -> Vec<usize> {
    if window == 0 || stride == 0 || n_samples < window {
        return Vec::new();
    }
    (0..=(n_samples - window) / stride).map(|i| i * stride).collect()
}

/// Cuts `rec` into fixed windows spaced `window_s - overlap_s` apart, transposed to `T x C`.
pub fn segment_recording(rec: &Recording, window_s: f64, overlap_s: f64) -> Result<SegmentSet> {
    if !(window_s > overlap_s && overlap_s >= 0.0) {
        return Err(Error::config(format!(
            "need window > overlap >= 0, got window {window_s} s, overlap {overlap_s} s"
        )));
    }
    let fs = rec.sample_rate_hz;
    let window = (window_s * fs).round() as usize;
    let overlap = (overlap_s * fs).round() as usize;
    if window == 0 || overlap >= window {
        return Err(Error::config(format!(
            "window of {window} samples with overlap {overlap} leaves no stride"
        )));
    }
    let s = rec.n_samples();
    let starts = window_starts(s, window, window - overlap);
    if starts.is_empty() {
        return Err(Error::Empty(format!(
            "recording of {s} samples is shorter than one {window}-sample window"
        )));
    }
    let c = rec.n_channels();
    let mut data = Vec::with_capacity(starts.len() * window * c);
    let mut labels = Vec::with_capacity(starts.len());
    for &start in &starts {
        for t in start..start + window {
            data.extend((0..c).map(|ch| rec.signal[ch * s + t] as f32));
        }
        labels.push(rec.label_at_window(start, window));
    }
    SegmentSet::new(
        SegmentMeta {
            n: starts.len(),
            t: window,
            c,
            sample_rate_hz: fs,
            window_seconds: window_s,
            overlap_seconds: overlap_s,
            labels,
            channel_names: rec.channel_names.clone(),
        },
        data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(c: usize, s: usize) -> Recording {
        let chans = (0..c).map(|ch| (0..s).map(|i| (ch * s + i) as f64).collect()).collect();
        Recording::new(chans, 200.0, LabelStream::Whole(1)).unwrap()
    }

    #[test]
    fn seed_shaped_recording_gives_133_windows() {
        let rec = flat(1, 48_000);
        let set = segment_recording(&rec, 2.0, 0.2).unwrap();
        assert_eq!(set.len(), 133);
        assert_eq!(set.window_len(), 400);
        // Brute-force enumeration of admissible starts.
        let brute = (0..48_000).step_by(360).filter(|&s| s + 400 <= 48_000).count();
        assert_eq!(brute, 133);
    }

    #[test]
    fn exactly_one_window() {
        let set = segment_recording(&flat(2, 400), 2.0, 0.2).unwrap();
        assert_eq!(set.len(), 1);
        assert!(matches!(segment_recording(&flat(2, 399), 2.0, 0.2), Err(Error::Empty(_))));
    }

    #[test]
    fn overlap_not_below_window_is_rejected() {
        let rec = flat(1, 1000);
        assert!(matches!(segment_recording(&rec, 2.0, 2.0), Err(Error::Config(_))));
        assert!(matches!(segment_recording(&rec, 2.0, 3.0), Err(Error::Config(_))));
    }

    #[test]
    fn layout_is_time_by_channel() {
        let set = segment_recording(&flat(3, 400), 2.0, 0.0).unwrap();
        let seg = set.segment(0);
        // sample t of channel ch was ch * 400 + t
        assert_eq!(seg[0..3], [0.0, 400.0, 800.0]);
        assert_eq!(seg[3..6], [1.0, 401.0, 801.0]);
    }

    #[test]
    fn majority_vote_with_earliest_tie_break() {
        assert_eq!(majority_label(&[2, 2, 1, 1]), 2);
        assert_eq!(majority_label(&[1, 2, 2, 1]), 1);
        assert_eq!(majority_label(&[0, 1, 1, 2]), 1);
        let labels: Vec<u8> = (0..800).map(|i| if i < 500 { 0 } else { 2 }).collect();
        let rec = Recording::new(vec![vec![0.0; 800]], 200.0, LabelStream::PerSample(labels)).unwrap();
        let set = segment_recording(&rec, 2.0, 0.0).unwrap();
        assert_eq!(set.labels(), &[0, 2]);
    }

    #[test]
    fn count_formula_matches_enumeration() {
        for s in (1..=1000).step_by(7) {
            for window in [1usize, 5, 40, 400] {
                for stride in [1usize, 3, 36, 360] {
                    let brute = (0..s).filter(|&st| st % stride == 0 && st + window <= s).count();
                    assert_eq!(window_starts(s, window, stride).len(), brute, "S={s} T={window} stride={stride}");
                }
            }
        }
    }
}
