//! Muscle-artifact removal for few-channel headsets by SSA expansion and
//! temporal CCA.
//!
//! Each channel is split into its top-k SSA components plus one row holding
//! the sum of all remaining components, so the rows of a channel always add
//! back up to it. The stacked rows are decorrelated by CCA against a
//! one-sample-delayed copy; sources whose lag-1 autocorrelation falls below
//! the threshold are treated as muscle activity and zeroed before
//! back-projection and per-channel re-summation.

use serde::{Deserialize, Serialize};

use super::{DenoiseReport, Method};
use crate::decompose::{cca_series, ssa_decompose};
use crate::error::{Error, Result};
use crate::noise::pearson;
use crate::signal::{Recording, Signal};

pub const MAX_CHANNELS: usize = 8;
pub const MIN_SECONDS: f64 = 2.0;
const DEFAULT_MAX_WINDOW: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsaCcaConfig {
    pub k: usize,
    /// `None` means `min(N / 2, 64)`.
    pub window_len: Option<usize>,
    pub autocorr_thresh: f64,
}

impl Default for SsaCcaConfig {
    fn default() -> Self {
        Self {
            k: 4,
            window_len: None,
            autocorr_thresh: 0.9,
        }
    }
}

pub fn remove_muscle_ssa_cca(rec: &Recording, autocorr_thresh: f64) -> Result<(Recording, DenoiseReport)> {
    remove_muscle_ssa_cca_with(
        rec,
        &SsaCcaConfig {
            autocorr_thresh,
            ..SsaCcaConfig::default()
        },
    )
}

pub fn remove_muscle_ssa_cca_with(rec: &Recording, cfg: &SsaCcaConfig) -> Result<(Recording, DenoiseReport)> {
    let c = rec.n_channels();
    if c == 0 || c > MAX_CHANNELS {
        return Err(Error::invalid(format!("expected 1 to {MAX_CHANNELS} channels, got {c}")));
    }
    if !(cfg.autocorr_thresh > 0.0 && cfg.autocorr_thresh < 1.0) {
        return Err(Error::invalid(format!(
            "autocorrelation threshold must lie in (0, 1), got {}",
            cfg.autocorr_thresh
        )));
    }
    if cfg.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = rec.len();
    let needed = (MIN_SECONDS * rec.fs()).ceil() as usize;
    if n < needed {
        return Err(Error::TooShort { needed, got: n });
    }
    let l = cfg.window_len.unwrap_or((n / 2).min(DEFAULT_MAX_WINDOW));

    // Dividing: k leading components plus the remainder, per channel.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    for (ch, s) in rec.channels().iter().enumerate() {
        let model = ssa_decompose(s, l)?;
        let k = cfg.k.min(model.components.len());
        let mut rest = s.samples().to_vec();
        for comp in &model.components[..k] {
            for (r, v) in rest.iter_mut().zip(comp.samples()) {
                *r -= v;
            }
            rows.push(comp.samples().to_vec());
            owner.push(ch);
        }
        rows.push(rest);
        owner.push(ch);
    }

    let delayed: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| std::iter::once(r[0]).chain(r[..n - 1].iter().copied()).collect())
        .collect();
    let res = cca_series(&rows, &delayed)?;

    let mut report = DenoiseReport::new(Method::SsaCca, n)
        .param("k", cfg.k)
        .param("window_len", l)
        .param("autocorr_thresh", cfg.autocorr_thresh)
        .param("sources", res.sources.len());
    let mut sources = res.sources.clone();
    for (i, s) in sources.iter_mut().enumerate() {
        let (ac, flat) = pearson(&s[1..], &s[..n - 1]);
        if !flat && ac < cfg.autocorr_thresh {
            report.components_removed.push(format!("source{i} (lag-1 r {ac:.3})"));
            s.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    if report.components_removed.is_empty() {
        return Ok((rec.clone(), report));
    }
    let cleaned_rows = res.back_project(&sources)?;

    // Combining: re-sum each channel's rows.
    let mut out = vec![vec![0.0; n]; c];
    for (row, &ch) in cleaned_rows.iter().zip(&owner) {
        for (o, v) in out[ch].iter_mut().zip(row) {
            *o += v;
        }
    }
    let channels = out
        .into_iter()
        .map(|x| Signal::new(x, rec.fs()))
        .collect::<Result<Vec<_>>>()?;
    let cleaned = Recording::new(channels, rec.channel_names().to_vec())?.with_meta(rec.subject_meta().clone());
    Ok((cleaned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifact::dwt::median;
    use crate::noise::{gen_noise, metrics_of, NoiseKind, NoiseSpec};
    use std::f64::consts::PI;

    const FS: f64 = 256.0;

    fn sines(n: usize) -> Recording {
        let freqs = [6.0, 8.0, 10.0, 12.0];
        let data = freqs
            .iter()
            .enumerate()
            .map(|(c, f)| (0..n).map(|i| (2.0 * PI * f * i as f64 / FS + c as f64).sin()).collect())
            .collect();
        Recording::from_samples(data, vec!["A".into(), "B".into(), "C".into(), "D".into()], FS).unwrap()
    }

    #[test]
    fn shared_emg_rmse_drops_thirty_percent() {
        let n = 1024;
        let clean = sines(n);
        let ratios: Vec<f64> = (0..21)
            .map(|seed| {
                let emg = gen_noise(&NoiseSpec::new(NoiseKind::EmgBurst, seed).with("duty", 1.0), n, FS).unwrap();
                let noisy = clean
                    .map_channels(|s| Ok(crate::noise::mix_at_snr(s, &emg, 0.0)?.0))
                    .unwrap();
                let (out, _) = remove_muscle_ssa_cca(&noisy, 0.9).unwrap();
                let mut before = 0.0;
                let mut after = 0.0;
                for ch in 0..4 {
                    let c = clean.channels()[ch].samples();
                    before += metrics_of(c, noisy.channels()[ch].samples()).unwrap().rmse;
                    after += metrics_of(c, out.channels()[ch].samples()).unwrap().rmse;
                }
                after / before
            })
            .collect();
        let med = median(&ratios);
        assert!(med <= 0.7, "median RMSE ratio {med}");
    }

    #[test]
    fn clean_sines_pass() {
        let clean = sines(1024);
        let (out, _) = remove_muscle_ssa_cca(&clean, 0.9).unwrap();
        for (a, b) in clean.channels().iter().zip(out.channels()) {
            assert!(pearson(a.samples(), b.samples()).0 >= 0.95);
        }
    }

    #[test]
    fn single_channel_and_length_checks() {
        let emg = gen_noise(&NoiseSpec::new(NoiseKind::EmgBurst, 1), 600, FS).unwrap();
        let rec = Recording::new(vec![emg], vec!["X".into()]).unwrap();
        let (out, _) = remove_muscle_ssa_cca(&rec, 0.9).unwrap();
        assert_eq!((out.n_channels(), out.len()), (1, 600));
        let short = sines(500);
        assert!(matches!(remove_muscle_ssa_cca(&short, 0.9), Err(Error::TooShort { needed: 512, .. })));
    }
}
