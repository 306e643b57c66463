//! Singular spectrum analysis: Hankel embedding, SVD, diagonal averaging.

use crate::error::{Error, Result};
use crate::linalg::jacobi_columns;
use crate::signal::Signal;

/// Upper bound on the default embedding window.
pub const MAX_DEFAULT_WINDOW: usize = 128;

pub fn default_window(n: usize) -> usize {
    (n / 2).min(MAX_DEFAULT_WINDOW)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaModel {
    pub window_len: usize,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
    /// Elementary reconstructed components, one per singular triple.
    pub components: Vec<Signal>,
}

impl SsaModel {
    /// Fraction of the total squared singular-value mass held by component `i`.
    pub fn mass_fraction(&self, i: usize) -> f64 {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        if total == 0.0 {
            0.0
        } else {
            self.singular_values[i].powi(2) / total
        }
    }
}

pub fn ssa_decompose(signal: &Signal, window_len: usize) -> Result<SsaModel> {
    let x = signal.samples();
    let n = x.len();
    if window_len < 2 || window_len > n / 2 {
        return Err(Error::invalid(format!(
            "SSA window {window_len} outside [2, {}] for {n} samples",
            n / 2
        )));
    }
    let l = window_len;
    let k = n - l + 1;
    // Columns of the transposed trajectory matrix are the lagged rows x[j..j+K].
    let cols: Vec<Vec<f64>> = (0..l).map(|j| x[j..j + k].to_vec()).collect();
    let cj = jacobi_columns(cols);

    let counts: Vec<f64> = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(k - 1);
            let hi = t.min(l - 1);
            (hi - lo + 1) as f64
        })
        .collect();
    let components = cj
        .v
        .iter()
        .zip(&cj.w)
        .map(|(u, w)| {
            // Anti-diagonal means of the rank-one matrix u w^T.
            let mut comp = vec![0.0; n];
            for (j, &uj) in u.iter().enumerate() {
                if uj == 0.0 {
                    continue;
                }
                for (c, &wk) in comp[j..j + k].iter_mut().zip(w) {
                    *c += uj * wk;
                }
            }
            for (c, cnt) in comp.iter_mut().zip(&counts) {
                *c /= cnt;
            }
            signal.with_samples(comp)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SsaModel {
        window_len: l,
        singular_values: cj.norms,
        components,
    })
}

/// Sums the elementary components listed in `group`.
pub fn ssa_reconstruct(model: &SsaModel, group: &[usize]) -> Result<Signal> {
    let first = model
        .components
        .first()
        .ok_or_else(|| Error::invalid("SSA model has no components"))?;
    let mut out = vec![0.0; first.len()];
    for &g in group {
        let c = model.components.get(g).ok_or_else(|| {
            Error::invalid(format!("component {g} out of range ({} available)", model.components.len()))
        })?;
        for (o, v) in out.iter_mut().zip(c.samples()) {
            *o += v;
        }
    }
    first.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_rank_one() {
        let s = Signal::new(vec![7.0; 40], 1.0).unwrap();
        let m = ssa_decompose(&s, 10).unwrap();
        let nonzero = m.singular_values.iter().filter(|&&v| v > 1e-10 * m.singular_values[0]).count();
        assert_eq!(nonzero, 1);
        let c0 = ssa_reconstruct(&m, &[0]).unwrap();
        for v in c0.samples() {
            assert!((v - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_mass_in_two_components() {
        let fs = 256.0;
        let x: Vec<f64> = (0..512).map(|i| (2.0 * PI * 10.0 * i as f64 / fs + 0.4).sin()).collect();
        let m = ssa_decompose(&Signal::new(x, fs).unwrap(), 32).unwrap();
        let top2 = m.mass_fraction(0) + m.mass_fraction(1);
        assert!(top2 >= 0.999, "{top2}");
    }

    #[test]
    fn full_group_reconstructs_input() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 23) as f64 - 11.0 + (i as f64 * 0.1).sin()).collect();
        let s = Signal::new(x.clone(), 1.0).unwrap();
        let m = ssa_decompose(&s, 25).unwrap();
        assert!(m.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let all: Vec<usize> = (0..m.components.len()).collect();
        let r = ssa_reconstruct(&m, &all).unwrap();
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in r.samples().iter().zip(&x) {
            assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn window_bounds() {
        let s = Signal::zeros(20, 1.0).unwrap();
        assert!(ssa_decompose(&s, 1).is_err());
        assert!(ssa_decompose(&s, 11).is_err());
        assert!(ssa_decompose(&s, 10).is_ok());
        let m = ssa_decompose(&Signal::new((0..20).map(|i| i as f64).collect(), 1.0).unwrap(), 4).unwrap();
        assert!(ssa_reconstruct(&m, &[4]).is_err());
    }

    #[test]
    fn default_window_is_capped() {
        assert_eq!(default_window(100), 50);
        assert_eq!(default_window(10_000), 128);
    }
}
