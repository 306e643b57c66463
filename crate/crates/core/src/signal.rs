//! Uniformly sampled waveforms and multichannel recordings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single uniformly sampled channel, amplitudes in microvolts.
///
/// Always nonempty, finite, and with a positive sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal must contain at least one sample"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {fs}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, fs })
    }

    /// A signal that shares this one's sampling rate.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.fs)
    }

    pub fn zeros(len: usize, fs: f64) -> Result<Self> {
        Self::new(vec![0.0; len], fs)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Mean square over the full record.
    pub fn power(&self) -> f64 {
        power(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }
}

/// Mean square of a slice (0 for an empty slice).
pub fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Half-sample symmetric index folding: `x[-1] = x[0]`, `x[n] = x[n-1]`.
///
/// Works for arbitrarily distant indices by repeated reflection.
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

/// Ordered set of equally long, equally sampled channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    channels: Vec<Signal>,
    channel_names: Vec<String>,
    #[serde(default)]
    subject_meta: BTreeMap<String, String>,
}

impl Recording {
    pub fn new(channels: Vec<Signal>, channel_names: Vec<String>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("recording needs at least one channel"));
        }
        if channels.len() != channel_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} channels but {} names",
                channels.len(),
                channel_names.len()
            )));
        }
        let (len, fs) = (channels[0].len(), channels[0].fs());
        for (c, name) in channels.iter().zip(&channel_names) {
            if c.len() != len || c.fs() != fs {
                return Err(Error::ShapeMismatch(format!(
                    "channel '{name}' has {} samples @ {} Hz, expected {len} @ {fs} Hz",
                    c.len(),
                    c.fs()
                )));
            }
        }
        for (i, name) in channel_names.iter().enumerate() {
            if channel_names[..i].contains(name) {
                return Err(Error::invalid(format!("duplicate channel name '{name}'")));
            }
        }
        Ok(Self {
            channels,
            channel_names,
            subject_meta: BTreeMap::new(),
        })
    }

    /// Builds a recording from raw per-channel sample vectors.
    pub fn from_samples(data: Vec<Vec<f64>>, names: Vec<String>, fs: f64) -> Result<Self> {
        let channels = data
            .into_iter()
            .map(|s| Signal::new(s, fs))
            .collect::<Result<Vec<_>>>()?;
        Self::new(channels, names)
    }

    pub fn with_meta(mut self, meta: BTreeMap<String, String>) -> Self {
        self.subject_meta = meta;
        self
    }

    pub fn channels(&self) -> &[Signal] {
        &self.channels
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn subject_meta(&self) -> &BTreeMap<String, String> {
        &self.subject_meta
    }

    pub fn channel(&self, name: &str) -> Option<&Signal> {
        self.channel_names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.channels[i])
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn fs(&self) -> f64 {
        self.channels[0].fs()
    }

    pub fn duration(&self) -> f64 {
        self.channels[0].duration()
    }

    /// Replaces the channel data, keeping names, rate and metadata.
    pub fn map_channels<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&Signal) -> Result<Signal>,
    {
        let channels = self.channels.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(channels, self.channel_names.clone())?.with_meta(self.subject_meta.clone()))
    }
}

/// Splits a signal into fixed-length windows.
///
/// The hop is `window * (1 - overlap)` samples (at least one); a trailing
/// partial window is dropped. A window longer than the signal yields no
/// epochs.
pub fn segment_epochs(signal: &Signal, window_s: f64, overlap: f64) -> Result<Vec<Signal>> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap must be in [0, 1), got {overlap}")));
    }
    let win = (window_s * signal.fs()).floor();
    if !(win >= 2.0) {
        return Err(Error::invalid(format!(
            "window of {window_s} s at {} Hz is shorter than 2 samples",
            signal.fs()
        )));
    }
    let win = win as usize;
    let hop = ((win as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let x = signal.samples();
    let mut out = Vec::new();
    let mut start = 0;
    while start + win <= x.len() {
        out.push(signal.with_samples(x[start..start + win].to_vec())?);
        start += hop;
    }
    Ok(out)
}

/// Centered moving average with half-sample symmetric edge padding.
pub fn moving_average(signal: &Signal, width: usize) -> Result<Signal> {
    let y = moving_average_slice(signal.samples(), width)?;
    signal.with_samples(y)
}

pub(crate) fn moving_average_slice(x: &[f64], width: usize) -> Result<Vec<f64>> {
    if width == 0 || width % 2 == 0 {
        return Err(Error::invalid(format!("moving-average width must be odd and positive, got {width}")));
    }
    if width > x.len() {
        return Err(Error::invalid(format!(
            "moving-average width {width} exceeds signal length {}",
            x.len()
        )));
    }
    let n = x.len();
    let half = (width / 2) as isize;
    let scale = 1.0 / width as f64;
    let out = (0..n as isize)
        .map(|i| {
            (i - half..=i + half)
                .map(|j| x[reflect_index(j, n)])
                .sum::<f64>()
                * scale
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(x: &[f64]) -> Signal {
        Signal::new(x.to_vec(), 256.0).unwrap()
    }

    #[test]
    fn signal_rejects_bad_input() {
        assert!(Signal::new(vec![], 1.0).is_err());
        assert!(Signal::new(vec![1.0], 0.0).is_err());
        assert!(Signal::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn recording_invariants() {
        let a = sig(&[1.0, 2.0]);
        let b = sig(&[1.0]);
        assert!(Recording::new(vec![a.clone(), b], vec!["A".into(), "B".into()]).is_err());
        assert!(Recording::new(vec![a.clone(), a.clone()], vec!["A".into(), "A".into()]).is_err());
        assert!(Recording::new(vec![], vec![]).is_err());
        let r = Recording::new(vec![a.clone(), a], vec!["TP9".into(), "AF7".into()]).unwrap();
        assert_eq!(r.channel("AF7").unwrap().len(), 2);
        assert!(r.channel("AF8").is_none());
    }

    #[test]
    fn epoch_counts() {
        let s = Signal::zeros(1024, 256.0).unwrap();
        let e = segment_epochs(&s, 1.0, 0.0).unwrap();
        assert_eq!(e.len(), 4);
        assert!(e.iter().all(|x| x.len() == 256));
        assert_eq!(segment_epochs(&s, 1.0, 0.5).unwrap().len(), 7);
        let short = Signal::zeros(100, 256.0).unwrap();
        assert!(segment_epochs(&short, 1.0, 0.0).unwrap().is_empty());
        assert!(segment_epochs(&s, 1.0 / 512.0, 0.0).is_err());
        assert!(segment_epochs(&s, 1.0, 1.0).is_err());
    }

    #[test]
    fn epochs_without_overlap_concatenate_to_prefix() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = sig(&x);
        let cat: Vec<f64> = segment_epochs(&s, 0.5, 0.0)
            .unwrap()
            .into_iter()
            .flat_map(Signal::into_samples)
            .collect();
        assert_eq!(&x[..cat.len()], &cat[..]);
    }

    #[test]
    fn moving_average_examples() {
        let y = moving_average(&sig(&[1.0; 4]), 3).unwrap();
        assert_eq!(y.samples(), &[1.0; 4]);
        let y = moving_average(&sig(&[0.0, 3.0, 0.0]), 3).unwrap();
        for v in y.samples() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let mut imp = vec![0.0; 9];
        imp[4] = 1.0;
        let y = moving_average(&sig(&imp), 3).unwrap();
        let expected = [0.0, 0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0, 0.0];
        for (a, b) in y.samples().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(moving_average(&sig(&[1.0; 4]), 2).is_err());
        assert!(moving_average(&sig(&[1.0; 4]), 5).is_err());
    }

    #[test]
    fn reflect_index_folds() {
        let n = 4;
        let got: Vec<usize> = (-5..9).map(|i| reflect_index(i, n)).collect();
        assert_eq!(got, vec![3, 3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0]);
    }
}
