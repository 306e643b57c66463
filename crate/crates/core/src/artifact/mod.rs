//! Artifact-removal methods.
//!
//! Every method maps contaminated input to a cleaned output of the same
//! shape plus a [`DenoiseReport`] describing what was removed. Methods are
//! registered under stable ids (see [`Method`]) that the CLI and reports use.

mod blink;
mod dwt;
mod emd_maf;
mod kalman;
mod lms;
mod ssa_cca;
pub mod ssa_motion;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Recording, Signal};

pub use blink::{remove_blink_template, BLINK_NCC_THRESHOLD};
pub use dwt::{denoise_dwt, ThresholdMode};
pub use emd_maf::{denoise_emd_maf, HIGH_FREQ_IMF_HZ};
pub use kalman::{adaptive_kalman_denoise, KalmanConfig};
pub use lms::cascade_lms;
pub use ssa_cca::{remove_muscle_ssa_cca, remove_muscle_ssa_cca_with, SsaCcaConfig};
pub use ssa_motion::{remove_motion_ssa, MOTION_MAX_HZ};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseReport {
    pub method_id: String,
    pub params: BTreeMap<String, String>,
    /// Descriptors of removed or attenuated components.
    pub components_removed: Vec<String>,
    pub input_len: usize,
}

impl DenoiseReport {
    pub(crate) fn new(method: Method, input_len: usize) -> Self {
        Self {
            method_id: method.id().to_string(),
            params: BTreeMap::new(),
            components_removed: Vec::new(),
            input_len,
        }
    }

    pub(crate) fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Identity,
    Dwt,
    EmdMaf,
    SsaMotion,
    SsaCca,
    Akf,
    CascadeLms,
    BlinkTemplate,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Identity,
        Method::Dwt,
        Method::EmdMaf,
        Method::SsaMotion,
        Method::SsaCca,
        Method::Akf,
        Method::CascadeLms,
        Method::BlinkTemplate,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::Dwt => "dwt",
            Method::EmdMaf => "emd_maf",
            Method::SsaMotion => "ssa_motion",
            Method::SsaCca => "ssa_cca",
            Method::Akf => "akf",
            Method::CascadeLms => "cascade_lms",
            Method::BlinkTemplate => "blink_template",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Tunables for every method, with the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodParams {
    pub dwt_levels: usize,
    pub dwt_mode: ThresholdMode,
    pub ma_width: usize,
    /// SSA embedding window; `None` picks the per-method default.
    pub ssa_window: Option<usize>,
    pub var_thresh: f64,
    pub autocorr_thresh: f64,
    pub ssa_cca_k: usize,
    pub kalman: KalmanConfig,
    pub mu: f64,
    pub taps: usize,
    /// Frequency of the synthetic reference used when no reference channels are named.
    pub line_freq: f64,
    pub lms_references: Vec<String>,
    pub blink_width_s: f64,
    pub frontal_channels: Vec<String>,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            dwt_levels: 3,
            dwt_mode: ThresholdMode::Soft,
            ma_width: 7,
            ssa_window: None,
            var_thresh: 0.1,
            autocorr_thresh: 0.9,
            ssa_cca_k: 4,
            kalman: KalmanConfig::default(),
            mu: 0.05,
            taps: 16,
            line_freq: 50.0,
            lms_references: Vec::new(),
            blink_width_s: 0.3,
            frontal_channels: vec!["AF7".into(), "AF8".into()],
        }
    }
}

/// Runs `method` over a whole recording.
///
/// Single-channel methods are applied channel by channel and their reports
/// merged, with removed components prefixed by the channel name.
pub fn denoise_recording(rec: &Recording, method: Method, p: &MethodParams) -> Result<(Recording, DenoiseReport)> {
    match method {
        Method::SsaCca => {
            let cfg = SsaCcaConfig {
                k: p.ssa_cca_k,
                window_len: p.ssa_window,
                autocorr_thresh: p.autocorr_thresh,
            };
            remove_muscle_ssa_cca_with(rec, &cfg)
        }
        Method::BlinkTemplate => {
            let width = ((p.blink_width_s * rec.fs()).round() as usize).max(2);
            let template = Signal::new(crate::noise::raised_cosine(width), rec.fs())?;
            let frontal: Vec<String> = p
                .frontal_channels
                .iter()
                .filter(|c| rec.channel(c).is_some())
                .cloned()
                .collect();
            let frontal = if frontal.is_empty() {
                rec.channel_names().to_vec()
            } else {
                frontal
            };
            remove_blink_template(rec, &template, &frontal)
        }
        Method::CascadeLms if !p.lms_references.is_empty() => {
            let refs = p
                .lms_references
                .iter()
                .map(|name| {
                    rec.channel(name)
                        .cloned()
                        .ok_or_else(|| Error::UnknownChannel(name.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            per_channel(rec, method, |name, s| {
                if p.lms_references.iter().any(|r| r == name) {
                    Ok((s.clone(), DenoiseReport::new(Method::CascadeLms, s.len())))
                } else {
                    cascade_lms(s, &refs, p.mu, p.taps)
                }
            })
        }
        _ => per_channel(rec, method, |_, s| denoise_signal(s, method, p)),
    }
}

/// Runs a single-channel method. Multichannel-only methods see a
/// one-channel recording.
pub fn denoise_signal(s: &Signal, method: Method, p: &MethodParams) -> Result<(Signal, DenoiseReport)> {
    match method {
        Method::Identity => Ok((s.clone(), DenoiseReport::new(Method::Identity, s.len()))),
        Method::Dwt => denoise_dwt(s, p.dwt_levels, p.dwt_mode),
        Method::EmdMaf => denoise_emd_maf(s, p.ma_width),
        Method::SsaMotion => {
            let l = p.ssa_window.unwrap_or_else(|| ssa_motion::default_window(s.len(), s.fs()));
            remove_motion_ssa(s, l, p.var_thresh)
        }
        Method::Akf => adaptive_kalman_denoise(s, &p.kalman),
        Method::CascadeLms => {
            let r: Vec<f64> = (0..s.len())
                .map(|i| (2.0 * std::f64::consts::PI * p.line_freq * i as f64 / s.fs()).sin())
                .collect();
            cascade_lms(s, &[s.with_samples(r)?], p.mu, p.taps)
        }
        Method::SsaCca | Method::BlinkTemplate => {
            let rec = Recording::new(vec![s.clone()], vec!["CH1".into()])?;
            let mut q = p.clone();
            q.frontal_channels = vec!["CH1".into()];
            let (out, rep) = denoise_recording(&rec, method, &q)?;
            Ok((out.channels()[0].clone(), rep))
        }
    }
}

fn per_channel(
    rec: &Recording,
    method: Method,
    mut f: impl FnMut(&str, &Signal) -> Result<(Signal, DenoiseReport)>,
) -> Result<(Recording, DenoiseReport)> {
    let mut report = DenoiseReport::new(method, rec.len());
    let mut out = Vec::with_capacity(rec.n_channels());
    for (name, s) in rec.channel_names().iter().zip(rec.channels()) {
        let (y, r) = f(name, s)?;
        for (k, v) in r.params {
            report.params.insert(k, v);
        }
        report
            .components_removed
            .extend(r.components_removed.into_iter().map(|c| format!("{name}:{c}")));
        out.push(y);
    }
    let rec = Recording::new(out, rec.channel_names().to_vec())?.with_meta(rec.subject_meta().clone());
    Ok((rec, report))
}
