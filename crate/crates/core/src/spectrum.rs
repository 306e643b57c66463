//! Thin FFT helpers over `rustfft`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward FFT of a real sequence.
pub fn fft_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// One-sided squared magnitudes `|X_k|^2` for `k = 0..=n/2`.
pub fn power_bins(x: &[f64]) -> Vec<f64> {
    let spec = fft_real(x);
    spec.iter().take(x.len() / 2 + 1).map(|c| c.norm_sqr()).collect()
}

/// Frequency (Hz) of bin `k` for an `n`-point transform.
pub fn bin_freq(k: usize, n: usize, fs: f64) -> f64 {
    k as f64 * fs / n as f64
}

/// Frequency of the largest one-sided magnitude bin, DC included.
pub fn dominant_frequency(x: &[f64], fs: f64) -> f64 {
    let p = power_bins(x);
    let k = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    bin_freq(k, x.len(), fs)
}

/// Fraction of one-sided spectral energy between `lo` and `hi` Hz (inclusive).
pub fn band_energy_fraction(x: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let p = power_bins(x);
    let n = x.len();
    let total: f64 = p.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let band: f64 = p
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = bin_freq(*k, n, fs);
            f >= lo && f <= hi
        })
        .map(|(_, v)| v)
        .sum();
    band / total
}

/// Zeroes every FFT bin at or above `cutoff` Hz (both halves of the spectrum).
pub fn brickwall_lowpass(x: &[f64], fs: f64, cutoff: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return vec![];
    }
    let mut spec = fft_real(x);
    for (k, c) in spec.iter_mut().enumerate() {
        let kk = k.min(n - k);
        if bin_freq(kk, n, fs) >= cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}
