//! Multilevel discrete wavelet transform (Daubechies-4, symmetric extension).
//!
//! Uses half-sample symmetric extension so any signal length round-trips
//! exactly; the input length of every level is stored in the decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{reflect_index, Signal};

/// Orthogonal wavelet filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavelet {
    pub name: &'static str,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

/// Daubechies scaling filter with four vanishing moments (8 taps).
const DB4_DEC_LO: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

impl Wavelet {
    pub fn db4() -> Self {
        Self::orthogonal("db4", &DB4_DEC_LO)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "db4" => Ok(Self::db4()),
            other => Err(Error::invalid(format!("unsupported wavelet '{other}'"))),
        }
    }

    fn orthogonal(name: &'static str, dec_lo: &[f64]) -> Self {
        let f = dec_lo.len();
        let rec_lo: Vec<f64> = dec_lo.iter().rev().copied().collect();
        let dec_hi: Vec<f64> = (0..f)
            .map(|k| if k % 2 == 0 { -dec_lo[f - 1 - k] } else { dec_lo[f - 1 - k] })
            .collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        Self {
            name,
            dec_lo: dec_lo.to_vec(),
            dec_hi,
            rec_lo,
            rec_hi,
        }
    }

    pub fn filter_len(&self) -> usize {
        self.dec_lo.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    /// Approximation coefficients at the coarsest level.
    pub approx: Vec<f64>,
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<f64>>,
    pub wavelet_id: String,
    pub levels: usize,
    pub original_length: usize,
    /// Input length of each level, finest first.
    pub level_lengths: Vec<usize>,
    pub fs: f64,
}

/// Largest level count whose coarsest approximation keeps at least one filter length.
pub fn max_level(n: usize, filter_len: usize) -> usize {
    let mut len = n;
    let mut levels = 0;
    while len >= filter_len {
        let next = (len + filter_len - 1) / 2;
        if next < filter_len {
            break;
        }
        len = next;
        levels += 1;
    }
    levels
}

pub fn dwt_forward(signal: &Signal, levels: usize) -> Result<WaveletDecomposition> {
    dwt_forward_with(signal, levels, &Wavelet::db4())
}

pub fn dwt_forward_with(
    signal: &Signal,
    levels: usize,
    wavelet: &Wavelet,
) -> Result<WaveletDecomposition> {
    let f = wavelet.filter_len();
    let n = signal.len();
    if levels == 0 {
        return Err(Error::InvalidLevels("levels must be at least 1".into()));
    }
    if n < f {
        return Err(Error::TooShort { needed: f, got: n });
    }
    let allowed = max_level(n, f);
    if levels > allowed {
        return Err(Error::InvalidLevels(format!(
            "{levels} levels leave a coarsest band shorter than the {f}-tap filter \
             for {n} samples (at most {allowed})"
        )));
    }
    let mut approx = signal.samples().to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut level_lengths = Vec::with_capacity(levels);
    for _ in 0..levels {
        level_lengths.push(approx.len());
        let (a, d) = analysis_step(&approx, wavelet);
        details.push(d);
        approx = a;
    }
    Ok(WaveletDecomposition {
        approx,
        details,
        wavelet_id: wavelet.name.to_string(),
        levels,
        original_length: n,
        level_lengths,
        fs: signal.fs(),
    })
}

pub fn dwt_inverse(dec: &WaveletDecomposition) -> Result<Signal> {
    let wavelet = Wavelet::by_name(&dec.wavelet_id)?;
    if dec.details.len() != dec.levels || dec.level_lengths.len() != dec.levels {
        return Err(Error::ShapeMismatch(format!(
            "decomposition claims {} levels but holds {} detail bands",
            dec.levels,
            dec.details.len()
        )));
    }
    let mut approx = dec.approx.clone();
    for lvl in (0..dec.levels).rev() {
        let d = &dec.details[lvl];
        if d.len() != approx.len() {
            return Err(Error::ShapeMismatch(format!(
                "level {} approximation has {} coefficients, detail has {}",
                lvl + 1,
                approx.len(),
                d.len()
            )));
        }
        approx = synthesis_step(&approx, d, dec.level_lengths[lvl], &wavelet);
    }
    Signal::new(approx, dec.fs)
}

fn analysis_step(x: &[f64], w: &Wavelet) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let f = w.filter_len();
    let out_len = (n + f - 1) / 2;
    let mut a = vec![0.0; out_len];
    let mut d = vec![0.0; out_len];
    for o in 0..out_len {
        let i = (2 * o + 1) as isize;
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..f {
            let v = x[reflect_index(i - j as isize, n)];
            sa += w.dec_lo[j] * v;
            sd += w.dec_hi[j] * v;
        }
        a[o] = sa;
        d[o] = sd;
    }
    (a, d)
}

/// Transpose of the analysis operator restricted to the original samples.
fn synthesis_step(a: &[f64], d: &[f64], n: usize, w: &Wavelet) -> Vec<f64> {
    let f = w.filter_len();
    let m = a.len();
    (0..n)
        .map(|t| {
            let o_lo = t.saturating_sub(1).div_ceil(2);
            let o_hi = ((t + f - 2) / 2).min(m - 1);
            (o_lo..=o_hi)
                .map(|o| {
                    let k = t + f - 2 - 2 * o;
                    a[o] * w.rec_lo[k] + d[o] * w.rec_hi[k]
                })
                .sum()
        })
        .collect()
}
