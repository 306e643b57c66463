//! Motion-artifact removal by discarding large, slow SSA components.

use super::{DenoiseReport, Method};
use crate::decompose::{ssa_decompose, ssa_reconstruct};
use crate::error::Result;
use crate::signal::Signal;
use crate::spectrum::dominant_frequency;

/// Components dominated by frequencies below this are motion candidates.
pub const MOTION_MAX_HZ: f64 = 1.0;

/// Embedding window long enough to span one period at [`MOTION_MAX_HZ`]:
/// `min(N / 2, max(128, fs / MOTION_MAX_HZ))`. Shorter windows split a slow
/// drift into one dominant and one weak component, and the weak one escapes
/// the mass test.
pub fn default_window(n: usize, fs: f64) -> usize {
    let span = (fs / MOTION_MAX_HZ).round() as usize;
    (n / 2).min(crate::decompose::ssa::MAX_DEFAULT_WINDOW.max(span))
}

pub fn remove_motion_ssa(signal: &Signal, window_len: usize, var_thresh: f64) -> Result<(Signal, DenoiseReport)> {
    let model = ssa_decompose(signal, window_len)?;
    let mut report = DenoiseReport::new(Method::SsaMotion, signal.len())
        .param("window_len", window_len)
        .param("var_thresh", var_thresh);
    let mut keep = Vec::with_capacity(model.components.len());
    for (i, c) in model.components.iter().enumerate() {
        let mass = model.mass_fraction(i);
        let f = dominant_frequency(c.samples(), signal.fs());
        if mass > var_thresh && f < MOTION_MAX_HZ {
            report
                .components_removed
                .push(format!("ssa{i} (mass {mass:.3}, {f:.2} Hz)"));
        } else {
            keep.push(i);
        }
    }
    if report.components_removed.is_empty() {
        return Ok((signal.clone(), report));
    }
    Ok((ssa_reconstruct(&model, &keep)?, report))
}
