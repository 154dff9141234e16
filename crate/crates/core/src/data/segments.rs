use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

pub const N_CLASSES: usize = 3;

/// Stack of equal-length labelled windows, stored `N x T x C` (segment, time, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    n: usize,
    t: usize,
    c: usize,
    data: Vec<f32>,
    labels: Vec<u8>,
    pub sample_rate_hz: f64,
    pub window_seconds: f64,
    pub overlap_seconds: f64,
    channel_names: Vec<String>,
}

/// Everything but the payload; mirrors the SEGD JSON header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub n: usize,
    pub t: usize,
    pub c: usize,
    pub sample_rate_hz: f64,
    pub window_seconds: f64,
    pub overlap_seconds: f64,
    pub labels: Vec<u8>,
    pub channel_names: Vec<String>,
}

impl SegmentSet {
    pub fn new(meta: SegmentMeta, data: Vec<f32>) -> Result<Self> {
        let SegmentMeta {
            n,
            t,
            c,
            sample_rate_hz,
            window_seconds,
            overlap_seconds,
            labels,
            channel_names,
        } = meta;
        if n == 0 || t == 0 || c == 0 {
            return Err(Error::Empty(format!("segment set with shape {n}x{t}x{c}")));
        }
        if data.len() != n * t * c {
            return Err(Error::shape("segment payload", &[n, t, c], &[data.len()]));
        }
        if labels.len() != n {
            return Err(Error::shape("segment labels", &[n], &[labels.len()]));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= N_CLASSES) {
            return Err(Error::Index(format!("label {bad} outside {{0, 1, 2}}")));
        }
        if channel_names.len() != c {
            return Err(Error::shape("channel names", &[c], &[channel_names.len()]));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::config(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if (window_seconds * sample_rate_hz).round() as usize != t {
            return Err(Error::config(format!(
                "window of {window_seconds} s at {sample_rate_hz} Hz does not give {t} samples"
            )));
        }
        Ok(SegmentSet {
            n,
            t,
            c,
            data,
            labels,
            sample_rate_hz,
            window_seconds,
            overlap_seconds,
            channel_names,
        })
    }

    pub fn meta(&self) -> SegmentMeta {
        SegmentMeta {
            n: self.n,
            t: self.t,
            c: self.c,
            sample_rate_hz: self.sample_rate_hz,
            window_seconds: self.window_seconds,
            overlap_seconds: self.overlap_seconds,
            labels: self.labels.clone(),
            channel_names: self.channel_names.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn window_len(&self) -> usize {
        self.t
    }

    pub fn n_channels(&self) -> usize {
        self.c
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    /// Segment `i` as a `T x C` row-major slice.
    pub fn segment(&self, i: usize) -> &[f32] {
        let stride = self.t * self.c;
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Subset of segments, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<SegmentSet> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::Index(format!("segment {bad} of {}", self.n)));
        }
        let mut data = Vec::with_capacity(indices.len() * self.t * self.c);
        for &i in indices {
            data.extend_from_slice(self.segment(i));
        }
        let mut meta = self.meta();
        meta.n = indices.len();
        meta.labels = indices.iter().map(|&i| self.labels[i]).collect();
        SegmentSet::new(meta, data)
    }

    /// Keeps only `channels`, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<SegmentSet> {
        if let Some(&bad) = channels.iter().find(|&&c| c >= self.c) {
            return Err(Error::Index(format!("channel {bad} of {}", self.c)));
        }
        let mut data = Vec::with_capacity(self.n * self.t * channels.len());
        for row in self.data.chunks_exact(self.c) {
            data.extend(channels.iter().map(|&c| row[c]));
        }
        let mut meta = self.meta();
        meta.c = channels.len();
        meta.channel_names = channels.iter().map(|&c| self.channel_names[c].clone()).collect();
        SegmentSet::new(meta, data)
    }

    /// Same segments with replaced labels.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<SegmentSet> {
        let mut meta = self.meta();
        meta.labels = labels;
        SegmentSet::new(meta, self.data.clone())
    }

    /// Same shape and labels with replaced payload.
    pub fn with_data(&self, data: Vec<f32>) -> Result<SegmentSet> {
        SegmentSet::new(self.meta(), data)
    }

    /// Batch of segments as a `[B, T, C]` tensor.
    pub fn batch(&self, indices: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(indices.len() * self.t * self.c);
        for &i in indices {
            data.extend(self.segment(i).iter().map(|&v| f64::from(v)));
        }
        Tensor::new(&[indices.len(), self.t, self.c], data).expect("batch shape")
    }

    pub fn batch_labels(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i] as usize).collect()
    }
}
