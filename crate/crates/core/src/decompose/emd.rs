//! Empirical mode decomposition by envelope-mean sifting.
//!
//! Envelopes are natural cubic splines through the local extrema, with the
//! two outermost maxima and minima mirrored about each end sample. Sifting
//! stops once the Cauchy SD between successive iterates drops below the
//! tolerance and the candidate satisfies the IMF extrema/zero-crossing
//! condition, or after `max_sifts` iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

pub const MIN_EMD_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdConfig {
    pub max_imfs: usize,
    pub sift_tol: f64,
    pub max_sifts: usize,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            max_imfs: 10,
            sift_tol: 0.2,
            max_sifts: 50,
        }
    }
}

/// IMFs ordered from highest to lowest frequency plus the final residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    pub imfs: Vec<Signal>,
    pub residual: Signal,
    pub sift_counts: Vec<usize>,
}

impl ImfSet {
    /// Sum of all IMFs and the residual.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.samples().to_vec();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf.samples()) {
                *o += v;
            }
        }
        out
    }
}

pub fn emd(signal: &Signal, max_imfs: usize, sift_tol: f64) -> Result<ImfSet> {
    emd_with(
        signal,
        &EmdConfig {
            max_imfs,
            sift_tol,
            ..EmdConfig::default()
        },
    )
}

pub fn emd_with(signal: &Signal, cfg: &EmdConfig) -> Result<ImfSet> {
    let x = signal.samples();
    if x.len() < MIN_EMD_LEN {
        return Err(Error::TooShort {
            needed: MIN_EMD_LEN,
            got: x.len(),
        });
    }
    if !(cfg.sift_tol > 0.0) || cfg.max_sifts == 0 {
        return Err(Error::invalid("sift_tol and max_sifts must be positive"));
    }
    let energy0: f64 = x.iter().map(|v| v * v).sum();
    let mut residual = x.to_vec();
    let mut imfs = Vec::new();
    let mut sift_counts = Vec::new();

    while imfs.len() < cfg.max_imfs {
        let (maxima, minima) = extrema(&residual);
        if maxima.is_empty() || minima.is_empty() {
            break;
        }
        let energy: f64 = residual.iter().map(|v| v * v).sum();
        if energy <= 1e-24 * energy0 {
            break;
        }
        let (imf, sifts) = sift(&residual, cfg);
        for (r, v) in residual.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(signal.with_samples(imf)?);
        sift_counts.push(sifts);
    }

    Ok(ImfSet {
        imfs,
        residual: signal.with_samples(residual)?,
        sift_counts,
    })
}

fn sift(x: &[f64], cfg: &EmdConfig) -> (Vec<f64>, usize) {
    let mut h = x.to_vec();
    let mut iterations = 0;
    while iterations < cfg.max_sifts {
        let (maxima, minima) = extrema(&h);
        if maxima.is_empty() || minima.is_empty() {
            break;
        }
        iterations += 1;
        let upper = envelope(&h, &maxima);
        let lower = envelope(&h, &minima);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..h.len() {
            let mean = 0.5 * (upper[i] + lower[i]);
            num += mean * mean;
            den += h[i] * h[i];
            h[i] -= mean;
        }
        let sd = if den > 0.0 { num / den } else { 0.0 };
        if sd < cfg.sift_tol && is_imf(&h) {
            break;
        }
    }
    (h, iterations)
}

/// Indices of local maxima and minima. Flat runs count once, at their centre.
pub fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = x.len();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let (prev, next) = (x[i - 1], x[j + 1]);
        if x[i] > prev && x[i] > next {
            maxima.push((i + j) / 2);
        } else if x[i] < prev && x[i] < next {
            minima.push((i + j) / 2);
        }
        i = j + 1;
    }
    (maxima, minima)
}

pub fn zero_crossings(x: &[f64]) -> usize {
    x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count()
}

/// IMF condition: extrema and zero-crossing counts differ by at most one.
pub fn is_imf(x: &[f64]) -> bool {
    let (mx, mn) = extrema(x);
    let ext = mx.len() + mn.len();
    ext.abs_diff(zero_crossings(x)) <= 1
}

fn envelope(x: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = x.len();
    let last = (n - 1) as f64;
    let k = idx.len().min(2);
    let mut t = Vec::with_capacity(idx.len() + 2 * k);
    let mut y = Vec::with_capacity(idx.len() + 2 * k);
    for &i in idx[..k].iter().rev() {
        t.push(-(i as f64));
        y.push(x[i]);
    }
    for &i in idx {
        t.push(i as f64);
        y.push(x[i]);
    }
    for &i in idx[idx.len() - k..].iter().rev() {
        t.push(2.0 * last - i as f64);
        y.push(x[i]);
    }
    let spline = NaturalSpline::new(&t, &y);
    (0..n).map(|i| spline.eval(i as f64)).collect()
}

/// Natural cubic spline (zero second derivative at both ends).
pub struct NaturalSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    /// `t` must be strictly increasing with at least two points.
    pub fn new(t: &[f64], y: &[f64]) -> Self {
        let n = t.len();
        assert!(n >= 2 && n == y.len());
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives (Thomas).
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = t[i] - t[i - 1];
                let h1 = t[i + 1] - t[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = t[i + 1] - t[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Self {
            t: t.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        let seg = match self.t.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.t[seg], self.t[seg + 1]);
        let h = t1 - t0;
        let a = (t1 - x) / h;
        let b = (x - t0) / h;
        a * self.y[seg]
            + b * self.y[seg + 1]
            + ((a * a * a - a) * self.m[seg] + (b * b * b - b) * self.m[seg + 1]) * h * h / 6.0
    }
}
