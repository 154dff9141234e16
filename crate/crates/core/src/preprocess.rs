//! Signal conditioning applied to whole recordings before segmentation:
//! common average reference, Butterworth bandpass, and a resonator notch.
//!
//! Filters are cascades of second-order sections run forward and backward
//! (zero phase), with odd-extension padding and steady-state initial
//! conditions at both ends.

use std::f64::consts::PI;

use crate::data::{Recording, SegmentSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    Bandpass,
    Notch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub low_hz: f64,
    pub high_hz: f64,
    pub notch_hz: f64,
    /// Quality factor of the notch.
    pub q: f64,
    /// Butterworth order of each bandpass edge.
    pub order: usize,
    pub sample_rate_hz: f64,
}

impl FilterSpec {
    /// 1-49 Hz, order 4.
    pub fn bandpass(sample_rate_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Bandpass,
            low_hz: 1.0,
            high_hz: 49.0,
            notch_hz: 60.0,
            q: 30.0,
            order: 4,
            sample_rate_hz,
        }
    }

    /// 60 Hz, Q = 30.
    pub fn notch(sample_rate_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Notch,
            ..FilterSpec::bandpass(sample_rate_hz)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz / 2.0;
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::config(format!("sample rate must be positive, got {}", self.sample_rate_hz)));
        }
        match self.kind {
            FilterKind::Bandpass => {
                if !(0.0 < self.low_hz && self.low_hz < self.high_hz && self.high_hz < nyquist) {
                    return Err(Error::config(format!(
                        "bandpass needs 0 < low < high < {nyquist} Hz, got {}-{} Hz",
                        self.low_hz, self.high_hz
                    )));
                }
                if self.order == 0 {
                    return Err(Error::config("filter order must be >= 1"));
                }
            }
            FilterKind::Notch => {
                if !(0.0 < self.notch_hz && self.notch_hz < nyquist) {
                    return Err(Error::config(format!(
                        "notch needs 0 < f < {nyquist} Hz, got {} Hz",
                        self.notch_hz
                    )));
                }
                if !(self.q > 0.0) {
                    return Err(Error::config("notch Q must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Second-order sections realising this filter.
    pub fn design(&self) -> Result<Vec<Biquad>> {
        self.validate()?;
        let fs = self.sample_rate_hz;
        let sections = match self.kind {
            FilterKind::Bandpass => {
                let mut s = butterworth(Edge::Highpass, self.order, self.low_hz, fs);
                s.extend(butterworth(Edge::Lowpass, self.order, self.high_hz, fs));
                s
            }
            FilterKind::Notch => vec![Biquad::notch(self.notch_hz, self.q, fs)],
        };
        for (i, s) in sections.iter().enumerate() {
            if !s.is_stable() {
                return Err(Error::Design(format!("section {i} has a pole on or outside the unit circle: {s:?}")));
            }
        }
        Ok(sections)
    }
}

/// Normalised biquad `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    Lowpass,
    Highpass,
}

impl Biquad {
    fn from_raw(b: [f64; 3], a: [f64; 3]) -> Self {
        Biquad {
            b: [b[0] / a[0], b[1] / a[0], b[2] / a[0]],
            a: [a[1] / a[0], a[2] / a[0]],
        }
    }

    fn second_order(edge: Edge, f0: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a = [1.0 + alpha, -2.0 * cos, 1.0 - alpha];
        let b = match edge {
            Edge::Lowpass => [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0],
            Edge::Highpass => [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0],
        };
        Biquad::from_raw(b, a)
    }

    fn first_order(edge: Edge, f0: f64, fs: f64) -> Self {
        let k = (PI * f0 / fs).tan();
        let a1 = (k - 1.0) / (k + 1.0);
        let b = match edge {
            Edge::Lowpass => [k / (1.0 + k), k / (1.0 + k), 0.0],
            Edge::Highpass => [1.0 / (1.0 + k), -1.0 / (1.0 + k), 0.0],
        };
        Biquad { b, a: [a1, 0.0] }
    }

    fn notch(f0: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        Biquad::from_raw([1.0, -2.0 * cos, 1.0], [1.0 + alpha, -2.0 * cos, 1.0 - alpha])
    }

    /// Both poles strictly inside the unit circle (Jury conditions for a quadratic).
    pub fn is_stable(&self) -> bool {
        let [a1, a2] = self.a;
        a2.abs() < 1.0 && a1.abs() < 1.0 + a2
    }

    /// Gain at z = 1.
    pub fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct-form II state that holds a constant unit input at steady state.
    fn steady_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let s2 = self.b[2] - self.a[1] * g;
        let s1 = self.b[1] - self.a[0] * g + s2;
        [s1, s2]
    }

    fn run(&self, x: &mut [f64], state: [f64; 2]) {
        let [mut s1, mut s2] = state;
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + s1;
            s1 = b1 * input - a1 * y + s2;
            s2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Butterworth edge of `order` as cascaded sections (one first-order section when odd).
fn butterworth(edge: Edge, order: usize, f0: f64, fs: f64) -> Vec<Biquad> {
    let mut sections: Vec<Biquad> = (0..order / 2)
        .map(|k| {
            let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
            Biquad::second_order(edge, f0, 1.0 / (2.0 * theta.cos()), fs)
        })
        .collect();
    if order % 2 == 1 {
        sections.push(Biquad::first_order(edge, f0, fs));
    }
    sections
}

fn run_cascade(sections: &[Biquad], x: &mut [f64]) {
    let mut level = x[0];
    for s in sections {
        let [z1, z2] = s.steady_state();
        s.run(x, [z1 * level, z2 * level]);
        level *= s.dc_gain();
    }
}

/// Zero-phase application of `sections` to one channel.
pub fn filtfilt(sections: &[Biquad], signal: &[f64], pad: usize) -> Vec<f64> {
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = pad.min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * signal[0] - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * signal[n - 1] - signal[n - 1 - i]));
    run_cascade(sections, &mut ext);
    ext.reverse();
    run_cascade(sections, &mut ext);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Edge padding used by [`apply_filter`]: one second of signal, at least `3 * (2 * sections + 1)` samples.
pub fn default_pad(spec: &FilterSpec, n_sections: usize) -> usize {
    (3 * (2 * n_sections + 1)).max(spec.sample_rate_hz.round() as usize)
}

/// Filters each channel independently with zero phase.
pub fn apply_filter(channels: &[Vec<f64>], spec: &FilterSpec) -> Result<Vec<Vec<f64>>> {
    let sections = spec.design()?;
    let pad = default_pad(spec, sections.len());
    Ok(channels.iter().map(|c| filtfilt(&sections, c, pad)).collect())
}

pub fn bandpass(channels: &[Vec<f64>], spec: &FilterSpec) -> Result<Vec<Vec<f64>>> {
    if spec.kind != FilterKind::Bandpass {
        return Err(Error::config("bandpass called with a notch spec"));
    }
    apply_filter(channels, spec)
}

pub fn notch(channels: &[Vec<f64>], spec: &FilterSpec) -> Result<Vec<Vec<f64>>> {
    if spec.kind != FilterKind::Notch {
        return Err(Error::config("notch called with a bandpass spec"));
    }
    apply_filter(channels, spec)
}

/// Subtracts the across-channel mean at every sample.
pub fn average_reference(channels: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if channels.len() < 2 {
        return Err(Error::config(format!(
            "average reference needs at least 2 channels, got {}",
            channels.len()
        )));
    }
    let s = channels[0].len();
    if let Some(bad) = channels.iter().find(|c| c.len() != s) {
        return Err(Error::shape("average_reference", &[s], &[bad.len()]));
    }
    let c = channels.len() as f64;
    let means: Vec<f64> = (0..s).map(|t| channels.iter().map(|ch| ch[t]).sum::<f64>() / c).collect();
    Ok(channels
        .iter()
        .map(|ch| ch.iter().zip(&means).map(|(v, m)| v - m).collect())
        .collect())
}

/// Which conditioning steps to run, in order: reference, bandpass, notch.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub average_reference: bool,
    pub bandpass: Option<FilterSpec>,
    pub notch: Option<FilterSpec>,
}

impl PreprocessConfig {
    pub fn standard(sample_rate_hz: f64) -> Self {
        PreprocessConfig {
            average_reference: true,
            bandpass: Some(FilterSpec::bandpass(sample_rate_hz)),
            notch: Some(FilterSpec::notch(sample_rate_hz)),
        }
    }

    pub fn apply(&self, channels: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        let mut out = channels;
        if self.average_reference {
            out = average_reference(&out)?;
        }
        if let Some(spec) = &self.bandpass {
            out = bandpass(&out, spec)?;
        }
        if let Some(spec) = &self.notch {
            out = notch(&out, spec)?;
        }
        Ok(out)
    }
}

pub fn preprocess_recording(rec: &Recording, config: &PreprocessConfig) -> Result<Recording> {
    let channels: Vec<Vec<f64>> = rec.channels().map(<[f64]>::to_vec).collect();
    rec.with_channels(config.apply(channels)?)
}

/// Conditions every segment on its own; prefer [`preprocess_recording`] when the
/// continuous recording is available, since short windows carry edge transients.
pub fn preprocess_segments(set: &SegmentSet, config: &PreprocessConfig) -> Result<SegmentSet> {
    let (t, c) = (set.window_len(), set.n_channels());
    let mut data = Vec::with_capacity(set.data().len());
    for i in 0..set.len() {
        let seg = set.segment(i);
        let channels: Vec<Vec<f64>> = (0..c)
            .map(|ch| (0..t).map(|ti| f64::from(seg[ti * c + ch])).collect())
            .collect();
        let out = config.apply(channels)?;
        for ti in 0..t {
            data.extend(out.iter().map(|ch| ch[ti] as f32));
        }
    }
    set.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_bounds_are_enforced() {
        assert!(FilterSpec::bandpass(100.0).design().is_ok());
        let mut spec = FilterSpec::bandpass(90.0);
        assert!(matches!(spec.design(), Err(Error::Config(_))));
        spec.high_hz = 40.0;
        assert!(spec.design().is_ok());
        let mut n = FilterSpec::notch(90.0);
        assert!(matches!(n.design(), Err(Error::Config(_))));
        n.notch_hz = 45.0 - 1e-9;
        assert!(n.validate().is_ok());
    }

    #[test]
    fn butterworth_sections_have_unit_passband_gain() {
        let lp = butterworth(Edge::Lowpass, 4, 49.0, 500.0);
        let g: f64 = lp.iter().map(Biquad::dc_gain).product();
        assert!((g - 1.0).abs() < 1e-12);
        let hp = butterworth(Edge::Highpass, 3, 1.0, 500.0);
        assert_eq!(hp.len(), 2);
        assert!(hp.iter().map(Biquad::dc_gain).product::<f64>().abs() < 1e-12);
    }

    #[test]
    fn unstable_section_detected() {
        let b = Biquad {
            b: [1.0, 0.0, 0.0],
            a: [0.0, -1.0],
        };
        assert!(!b.is_stable());
    }

    #[test]
    fn average_reference_examples() {
        let out = average_reference(&[vec![2.0, 5.0], vec![2.0, 5.0]]).unwrap();
        assert!(out.iter().flatten().all(|&v| v == 0.0));
        let out = average_reference(&[vec![1.0; 4], vec![3.0; 4]]).unwrap();
        assert_eq!(out, vec![vec![-1.0; 4], vec![1.0; 4]]);
        assert!(matches!(average_reference(&[vec![1.0]]), Err(Error::Config(_))));
    }
}
