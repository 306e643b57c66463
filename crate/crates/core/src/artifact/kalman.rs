//! Scalar adaptive Kalman filter with innovation-based noise estimation.

use serde::{Deserialize, Serialize};

use super::{DenoiseReport, Method};
use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanConfig {
    /// Process-noise variance of the random-walk state.
    pub q: f64,
    /// Initial measurement-noise variance.
    pub r0: f64,
    /// Samples between measurement-noise re-estimates.
    pub adapt_window: usize,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            q: 1e-2,
            r0: 1.0,
            adapt_window: 64,
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q.is_finite()) || !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::invalid(format!("q and r0 must be positive, got q={} r0={}", self.q, self.r0)));
        }
        if self.adapt_window < 8 {
            return Err(Error::invalid(format!("adapt_window must be at least 8, got {}", self.adapt_window)));
        }
        Ok(())
    }
}

/// Filters with the model `x[k] = x[k-1] + w`, `z[k] = x[k] + v`.
///
/// Every `adapt_window` samples the measurement variance is reset to the
/// window's innovation variance minus its mean predicted variance, floored
/// at `r0 / 100`.
pub fn adaptive_kalman_denoise(signal: &Signal, cfg: &KalmanConfig) -> Result<(Signal, DenoiseReport)> {
    cfg.validate()?;
    let z = signal.samples();
    let floor = cfg.r0 / 100.0;
    let mut x = z[0];
    let mut p = cfg.r0;
    let mut r = cfg.r0;
    let mut out = Vec::with_capacity(z.len());
    let mut innov = Vec::with_capacity(cfg.adapt_window);
    let mut prior = Vec::with_capacity(cfg.adapt_window);
    let mut updates = 0usize;
    for &zk in z {
        let p_pred = p + cfg.q;
        let nu = zk - x;
        let gain = p_pred / (p_pred + r);
        x += gain * nu;
        p = (1.0 - gain) * p_pred;
        out.push(x);
        innov.push(nu);
        prior.push(p_pred);
        if innov.len() == cfg.adapt_window {
            let m = innov.iter().sum::<f64>() / innov.len() as f64;
            let var = innov.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / innov.len() as f64;
            let mp = prior.iter().sum::<f64>() / prior.len() as f64;
            r = (var - mp).max(floor);
            updates += 1;
            innov.clear();
            prior.clear();
        }
    }
    let report = DenoiseReport::new(Method::Akf, z.len())
        .param("q", cfg.q)
        .param("r0", cfg.r0)
        .param("adapt_window", cfg.adapt_window)
        .param("final_r", r)
        .param("r_updates", updates);
    Ok((signal.with_samples(out)?, report))
}
