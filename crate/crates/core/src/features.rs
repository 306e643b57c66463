//! Spectral and time-domain features per epoch and channel.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{segment_epochs, Recording, Signal};
use crate::spectrum::fft_real;

pub const MIN_SEG_LEN: usize = 8;

/// Band edges in Hz: delta, theta, alpha, beta, gamma.
pub const BANDS: [(&str, f64, f64); 5] = [
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 45.0),
];

/// Per-channel feature suffixes, in column order.
pub const FEATURES_PER_CHANNEL: [&str; 12] = [
    "delta", "theta", "alpha", "beta", "gamma", "entropy", "mean", "var", "min", "max", "skew", "kurt",
];

/// One-sided Welch PSD estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub segments: usize,
}

/// Averages Hann-windowed periodograms (constant detrend per segment,
/// density scaling). The hop is `seg_len - floor(seg_len * overlap)`.
pub fn welch_psd(signal: &Signal, seg_len: usize, overlap: f64) -> Result<Psd> {
    let x = signal.samples();
    if seg_len < MIN_SEG_LEN {
        return Err(Error::invalid(format!("Welch segment length must be at least {MIN_SEG_LEN}, got {seg_len}")));
    }
    if seg_len > x.len() {
        return Err(Error::invalid(format!(
            "Welch segment length {seg_len} exceeds signal length {}",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap must lie in [0, 1), got {overlap}")));
    }
    let fs = signal.fs();
    let hop = seg_len - (seg_len as f64 * overlap).floor() as usize;
    // Periodic Hann window.
    let w: Vec<f64> = (0..seg_len)
        .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / seg_len as f64).cos())
        .collect();
    let scale = 1.0 / (fs * w.iter().map(|v| v * v).sum::<f64>());
    let n_bins = seg_len / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut segments = 0;
    let mut start = 0;
    while start + seg_len <= x.len() {
        let seg = &x[start..start + seg_len];
        let m = seg.iter().sum::<f64>() / seg_len as f64;
        let windowed: Vec<f64> = seg.iter().zip(&w).map(|(v, wk)| (v - m) * wk).collect();
        for (a, c) in acc.iter_mut().zip(fft_real(&windowed)) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (seg_len % 2 == 0 && k == n_bins - 1) { 1.0 } else { 2.0 };
            a * scale * one_sided / segments as f64
        })
        .collect();
    let freqs = (0..n_bins).map(|k| k as f64 * fs / seg_len as f64).collect();
    Ok(Psd { freqs, psd, segments })
}

/// Trapezoidal integral of the PSD over the grid points inside `[lo, hi]`.
pub fn band_power(freqs: &[f64], psd: &[f64], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = freqs
        .iter()
        .zip(psd)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(f, p)| (*f, *p))
        .collect();
    pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
}

/// Delta, theta, alpha, beta and gamma power.
pub fn band_powers(freqs: &[f64], psd: &[f64]) -> [f64; 5] {
    BANDS.map(|(_, lo, hi)| band_power(freqs, psd, lo, hi))
}

/// Shannon entropy of the normalized PSD divided by `ln(n_bins)`.
pub fn spectral_entropy(psd: &[f64]) -> Result<f64> {
    if psd.iter().any(|p| *p < 0.0 || !p.is_finite()) {
        return Err(Error::invalid("PSD must be finite and nonnegative"));
    }
    let total: f64 = psd.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateInput("PSD is all zero".into()));
    }
    if psd.len() < 2 {
        return Ok(0.0);
    }
    let h: f64 = psd
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum();
    Ok((h / (psd.len() as f64).ln()).clamp(0.0, 1.0))
}

/// Population moments of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub mean: f64,
    pub var: f64,
    pub min: f64,
    pub max: f64,
    pub skew: f64,
    /// Excess kurtosis.
    pub kurt: f64,
    /// Set for constant input, where skew and kurtosis are reported as 0.
    pub degenerate: bool,
}

impl TimeStats {
    pub fn to_array(&self) -> [f64; 6] {
        [self.mean, self.var, self.min, self.max, self.skew, self.kurt]
    }
}

pub fn time_stats(signal: &Signal) -> Result<TimeStats> {
    let x = signal.samples();
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = min == max || m2 <= f64::EPSILON * mean.abs().max(f64::MIN_POSITIVE).powi(2);
    let (skew, kurt) = if degenerate {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    Ok(TimeStats {
        mean,
        var: if min == max { 0.0 } else { m2 },
        min,
        max,
        skew,
        kurt,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpochConfig {
    pub window_s: f64,
    pub overlap: f64,
    /// Welch segment length, capped at the epoch length.
    pub seg_len: usize,
    pub psd_overlap: f64,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            window_s: 2.0,
            overlap: 0.5,
            seg_len: 256,
            psd_overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub labels: Option<Vec<usize>>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, feature_names: Vec<String>, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(r) = rows.iter().position(|r| r.len() != feature_names.len()) {
            return Err(Error::ShapeMismatch(format!(
                "row {r} has {} values for {} feature names",
                rows[r].len(),
                feature_names.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(Error::ShapeMismatch(format!("{} labels for {} rows", l.len(), rows.len())));
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature values must be finite"));
        }
        Ok(Self {
            rows,
            feature_names,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Appends the rows of `other`, which must have the same columns.
    pub fn append(&mut self, other: FeatureMatrix) -> Result<()> {
        if other.feature_names != self.feature_names {
            return Err(Error::ShapeMismatch("feature columns differ".into()));
        }
        match (&mut self.labels, other.labels) {
            (Some(a), Some(b)) => a.extend(b),
            (None, None) => {}
            _ if self.rows.is_empty() => {}
            _ => return Err(Error::ShapeMismatch("cannot mix labeled and unlabeled rows".into())),
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    /// Header of feature names plus a trailing `label` column when labeled.
    /// Labels are written as class names when `class_names` covers them.
    pub fn write_csv(&self, path: &Path, class_names: &[String]) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let mut header = self.feature_names.join(",");
        if self.labels.is_some() {
            header.push_str(",label");
        }
        writeln!(w, "{header}").map_err(io)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut line = row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",");
            if let Some(l) = &self.labels {
                let name = class_names.get(l[i]).cloned().unwrap_or_else(|| l[i].to_string());
                line.push(',');
                line.push_str(&name);
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

pub fn feature_names(channels: &[String]) -> Vec<String> {
    channels
        .iter()
        .flat_map(|c| FEATURES_PER_CHANNEL.iter().map(move |f| format!("{c}_{f}")))
        .collect()
}

/// Twelve features for one channel epoch. Flat epochs yield zero entropy.
pub fn channel_features(epoch: &Signal, cfg: &EpochConfig) -> Result<[f64; 12]> {
    let seg = cfg.seg_len.min(epoch.len());
    let psd = welch_psd(epoch, seg, cfg.psd_overlap)?;
    let bands = band_powers(&psd.freqs, &psd.psd);
    let entropy = match spectral_entropy(&psd.psd) {
        Ok(h) => h,
        Err(Error::DegenerateInput(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let t = time_stats(epoch)?.to_array();
    let mut out = [0.0; 12];
    out[..5].copy_from_slice(&bands);
    out[5] = entropy;
    out[6..].copy_from_slice(&t);
    Ok(out)
}

/// One row per epoch; columns are `<channel>_<feature>`.
pub fn build_feature_matrix(rec: &Recording, cfg: &EpochConfig, label: Option<usize>) -> Result<FeatureMatrix> {
    let names = feature_names(rec.channel_names());
    let per_channel = rec
        .channels()
        .iter()
        .map(|c| segment_epochs(c, cfg.window_s, cfg.overlap))
        .collect::<Result<Vec<_>>>()?;
    let n_epochs = per_channel.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(n_epochs);
    for e in 0..n_epochs {
        let mut row = Vec::with_capacity(names.len());
        for epochs in &per_channel {
            row.extend(channel_features(&epochs[e], cfg)?);
        }
        rows.push(row);
    }
    let labels = label.map(|l| vec![l; rows.len()]);
    FeatureMatrix::new(rows, names, labels)
}
