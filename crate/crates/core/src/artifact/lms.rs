//! Cascaded normalized-LMS interference cancellation.

use super::{DenoiseReport, Method};
use crate::error::{Error, Result};
use crate::signal::{power, Signal};

const NLMS_EPS: f64 = 1e-8;
const DIVERGENCE_RATIO: f64 = 100.0;

/// One NLMS stage per reference, in order. Each stage subtracts its
/// adaptive estimate of the reference's contribution from the running
/// output.
pub fn cascade_lms(primary: &Signal, references: &[Signal], mu: f64, taps: usize) -> Result<(Signal, DenoiseReport)> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    if taps == 0 {
        return Err(Error::invalid("taps must be at least 1"));
    }
    if let Some(r) = references.iter().find(|r| r.len() != primary.len()) {
        return Err(Error::ShapeMismatch(format!(
            "reference has {} samples, primary has {}",
            r.len(),
            primary.len()
        )));
    }
    let input_energy = power(primary.samples());
    let mut d = primary.samples().to_vec();
    let mut report = DenoiseReport::new(Method::CascadeLms, d.len())
        .param("mu", mu)
        .param("taps", taps)
        .param("stages", references.len());
    for (stage, r) in references.iter().enumerate() {
        d = nlms_stage(&d, r.samples(), mu, taps);
        let e = power(&d);
        let ratio = if input_energy > 0.0 { e / input_energy } else { 0.0 };
        if !e.is_finite() || ratio > DIVERGENCE_RATIO {
            return Err(Error::Divergence { stage, ratio });
        }
        report
            .components_removed
            .push(format!("stage{stage}: reference {stage} cancelled"));
    }
    Ok((primary.with_samples(d)?, report))
}

fn nlms_stage(d: &[f64], r: &[f64], mu: f64, taps: usize) -> Vec<f64> {
    let mut w = vec![0.0; taps];
    let mut u = vec![0.0; taps];
    let mut energy = 0.0;
    let mut out = Vec::with_capacity(d.len());
    for (&dk, &rk) in d.iter().zip(r) {
        energy -= u[taps - 1] * u[taps - 1];
        u.rotate_right(1);
        u[0] = rk;
        energy = (energy + rk * rk).max(0.0);
        let y: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
        let e = dk - y;
        let step = mu * e / (energy + NLMS_EPS);
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi += step * ui;
        }
        out.push(e);
    }
    out
}
