//! Column-wise z-score and min-max scaling with reusable statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    Zscore,
    Minmax,
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zscore" => Ok(NormMode::Zscore),
            "minmax" => Ok(NormMode::Minmax),
            other => Err(Error::invalid(format!("unknown normalization mode '{other}'"))),
        }
    }
}

/// Per-column affine map `y = (x - shift) / scale`.
///
/// For z-score `shift` is the mean and `scale` the population standard
/// deviation; for min-max they are the minimum and the range. A zero
/// scale (constant column) is stored as 1 so the column maps to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mode: NormMode,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl NormStats {
    pub fn fit(rows: &[Vec<f64>], mode: NormMode) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("cannot normalize empty data"))?;
        let d = first.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let n = rows.len() as f64;
        let mut shift = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let col = rows.iter().map(|r| r[j]);
            match mode {
                NormMode::Zscore => {
                    let mu = col.clone().sum::<f64>() / n;
                    let var = col.map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
                    shift[j] = mu;
                    scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
                }
                NormMode::Minmax => {
                    let lo = col.clone().fold(f64::INFINITY, f64::min);
                    let hi = col.fold(f64::NEG_INFINITY, f64::max);
                    shift[j] = lo;
                    scale[j] = if hi > lo { hi - lo } else { 1.0 };
                }
            }
        }
        Ok(Self { mode, shift, scale })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, k))| (v - s) / k)
            .collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.dim() {
                    Err(Error::ShapeMismatch(format!(
                        "row has {} columns, stats have {}",
                        r.len(),
                        self.dim()
                    )))
                } else {
                    Ok(self.apply_row(r))
                }
            })
            .collect()
    }

    pub fn invert(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .zip(self.shift.iter().zip(&self.scale))
                    .map(|(v, (s, k))| v * k + s)
                    .collect()
            })
            .collect()
    }
}

/// Normalizes rows column-wise. Supplied `stats` are applied as-is
/// (test-set path); otherwise they are fitted on `rows`.
pub fn normalize(
    rows: &[Vec<f64>],
    mode: NormMode,
    stats: Option<&NormStats>,
) -> Result<(Vec<Vec<f64>>, NormStats)> {
    let stats = match stats {
        Some(s) => s.clone(),
        None => NormStats::fit(rows, mode)?,
    };
    Ok((stats.apply(rows)?, stats))
}

/// Single-column variant for a waveform.
pub fn normalize_signal(
    signal: &Signal,
    mode: NormMode,
    stats: Option<&NormStats>,
) -> Result<(Signal, NormStats)> {
    let rows: Vec<Vec<f64>> = signal.samples().iter().map(|&v| vec![v]).collect();
    let (out, stats) = normalize(&rows, mode, stats)?;
    Ok((signal.with_samples(out.into_iter().map(|r| r[0]).collect())?, stats))
}
