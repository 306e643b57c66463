//! Wavelet shrinkage with the universal threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DenoiseReport, Method};
use crate::decompose::{dwt_forward, dwt_inverse};
use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Soft,
    Hard,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::Soft => "soft",
            ThresholdMode::Hard => "hard",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(ThresholdMode::Soft),
            "hard" => Ok(ThresholdMode::Hard),
            _ => Err(Error::invalid(format!("threshold mode must be soft or hard, got '{s}'"))),
        }
    }
}

pub(crate) fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Thresholds every detail band at `sigma * sqrt(2 ln N)`, with `sigma`
/// estimated as `median|d1| / 0.6745` from the finest band.
pub fn denoise_dwt(signal: &Signal, levels: usize, mode: ThresholdMode) -> Result<(Signal, DenoiseReport)> {
    let mut dec = dwt_forward(signal, levels)?;
    let abs: Vec<f64> = dec.details[0].iter().map(|v| v.abs()).collect();
    let sigma = median(&abs) / 0.6745;
    let t = sigma * (2.0 * (signal.len() as f64).ln()).sqrt();
    let mut report = DenoiseReport::new(Method::Dwt, signal.len())
        .param("levels", levels)
        .param("mode", mode)
        .param("wavelet", &dec.wavelet_id)
        .param("threshold", t);
    for (lvl, band) in dec.details.iter_mut().enumerate() {
        let mut zeroed = 0;
        for c in band.iter_mut() {
            let a = c.abs();
            if a <= t {
                if *c != 0.0 {
                    zeroed += 1;
                }
                *c = 0.0;
            } else if mode == ThresholdMode::Soft {
                *c = c.signum() * (a - t);
            }
        }
        report
            .components_removed
            .push(format!("d{}: {zeroed}/{} zeroed", lvl + 1, band.len()));
    }
    let out = dwt_inverse(&dec)?;
    Ok((out, report))
}
