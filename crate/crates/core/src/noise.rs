//! Contaminant generators, SNR-controlled mixing and evaluation metrics.
//!
//! Power is the mean square over the full record throughout, so an SNR is
//! `10 log10(mean(clean^2) / mean(noise^2))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{apply_filter, FilterSpec};
use crate::rng;
use crate::signal::{power, Recording, Signal};
use crate::spectrum::brickwall_lowpass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Awgn,
    Powerline,
    BaselineWander,
    EmgBurst,
    Blink,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::Awgn,
        NoiseKind::Powerline,
        NoiseKind::BaselineWander,
        NoiseKind::EmgBurst,
        NoiseKind::Blink,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Awgn => "awgn",
            NoiseKind::Powerline => "powerline",
            NoiseKind::BaselineWander => "baseline_wander",
            NoiseKind::EmgBurst => "emg_burst",
            NoiseKind::Blink => "blink",
        }
    }

    /// Parameter names and their defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            NoiseKind::Awgn => &[("sigma", 1.0)],
            NoiseKind::Powerline => &[("freq", 50.0), ("amp", 1.0)],
            NoiseKind::BaselineWander => &[("freq", 0.3), ("amp", 1.0), ("walk", 0.5)],
            NoiseKind::EmgBurst => &[("lo", 20.0), ("hi", 60.0), ("duty", 0.5), ("period", 1.0), ("amp", 1.0)],
            NoiseKind::Blink => &[("width", 0.3), ("rate", 15.0), ("amp", 1.0)],
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownNoiseKind(s.to_string()))
    }
}

/// Parametric contaminant description.
///
/// Text form: `kind=emg_burst,duty=0.5,seed=7`. Omitted parameters take the
/// kind's defaults; [`NoiseSpec::resolved`] fills them in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub params: BTreeMap<String, f64>,
    #[serde(with = "crate::report::seed_string")]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or_else(|| {
            self.kind
                .defaults()
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .unwrap_or(f64::NAN)
        })
    }

    /// Copy with every default parameter made explicit.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        for (k, v) in self.kind.defaults() {
            out.params.entry(k.to_string()).or_insert(*v);
        }
        out
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        let known: Vec<&str> = self.kind.defaults().iter().map(|(k, _)| *k).collect();
        if let Some(k) = self.params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::invalid(format!(
                "parameter '{k}' is not valid for {} (expected one of {known:?})",
                self.kind
            )));
        }
        let nyq = fs / 2.0;
        let p = |k| self.param(k);
        let bad = |msg: String| Err(Error::invalid(format!("{}: {msg}", self.kind)));
        match self.kind {
            NoiseKind::Awgn if !(p("sigma") > 0.0) => bad(format!("sigma must be positive, got {}", p("sigma"))),
            NoiseKind::Powerline if !(p("freq") > 0.0 && p("freq") < nyq) => {
                bad(format!("freq {} Hz must lie in (0, {nyq})", p("freq")))
            }
            NoiseKind::BaselineWander if !(p("freq") > 0.0 && p("freq") < 1.0) => {
                bad(format!("freq {} Hz must lie in (0, 1)", p("freq")))
            }
            NoiseKind::BaselineWander if !(p("walk") >= 0.0) => bad("walk must be nonnegative".into()),
            NoiseKind::EmgBurst if !(p("lo") > 0.0 && p("lo") < p("hi") && p("hi") < nyq) => {
                bad(format!("band {}-{} Hz must lie inside (0, {nyq})", p("lo"), p("hi")))
            }
            NoiseKind::EmgBurst if !(p("duty") > 0.0 && p("duty") <= 1.0) => {
                bad(format!("duty {} must lie in (0, 1]", p("duty")))
            }
            NoiseKind::EmgBurst if !(p("period") > 0.0) => bad("period must be positive".into()),
            NoiseKind::Blink if !(p("width") > 0.0 && p("rate") > 0.0) => {
                bad("width and rate must be positive".into())
            }
            _ if self.params.values().any(|v| !v.is_finite()) => bad("parameters must be finite".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={}", self.kind)?;
        for (k, v) in &self.params {
            write!(f, ",{k}={v}")?;
        }
        write!(f, ",seed={}", self.seed)
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut seed = 0;
        let mut params = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got '{part}'")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "kind" => kind = Some(v.parse::<NoiseKind>()?),
                "seed" => {
                    seed = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("seed must be an unsigned integer, got '{v}'")))?
                }
                _ => {
                    let val: f64 = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("parameter {k} must be numeric, got '{v}'")))?;
                    params.insert(k.to_string(), val);
                }
            }
        }
        let kind = kind.ok_or_else(|| Error::invalid("noise spec is missing kind="))?;
        Ok(Self { kind, params, seed })
    }
}

/// Generates `n` samples of the contaminant described by `spec`.
pub fn gen_noise(spec: &NoiseSpec, n: usize, fs: f64) -> Result<Signal> {
    if n == 0 {
        return Err(Error::invalid("noise length must be at least 1"));
    }
    spec.validate(fs)?;
    let mut rng = rng::stream(spec.seed, spec.kind.as_str());
    let p = |k| spec.param(k);
    let t = |i: usize| i as f64 / fs;
    let samples = match spec.kind {
        NoiseKind::Awgn => {
            let sigma = p("sigma");
            (0..n)
                .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); sigma * z })
                .collect::<Vec<f64>>()
        }
        NoiseKind::Powerline => {
            let phase = rng.random_range(0.0..2.0 * PI);
            let (f, a) = (p("freq"), p("amp"));
            (0..n).map(|i| a * (2.0 * PI * f * t(i) + phase).sin()).collect()
        }
        NoiseKind::BaselineWander => {
            let phase = rng.random_range(0.0..2.0 * PI);
            let (f, a) = (p("freq"), p("amp"));
            let mut walk: Vec<f64> = Vec::with_capacity(n);
            let mut acc = 0.0;
            for _ in 0..n {
                let step: f64 = StandardNormal.sample(&mut rng);
                acc += step;
                walk.push(acc);
            }
            let mu = crate::signal::mean(&walk);
            walk.iter_mut().for_each(|v| *v -= mu);
            let mut walk = brickwall_lowpass(&walk, fs, 1.0);
            let rms = power(&walk).sqrt();
            let target = p("walk") * std::f64::consts::FRAC_1_SQRT_2;
            if rms > 0.0 {
                walk.iter_mut().for_each(|v| *v *= target / rms);
            }
            (0..n)
                .map(|i| a * ((2.0 * PI * f * t(i) + phase).sin() + walk[i]))
                .collect()
        }
        NoiseKind::EmgBurst => {
            let white: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let band = FilterSpec::bandpass(p("lo"), p("hi"), 4);
            let mut x = apply_filter(&Signal::new(white, fs)?, &band)?.into_samples();
            let rms = power(&x).sqrt();
            let env = burst_envelope(n, fs, p("duty"), p("period"), &mut rng);
            let a = p("amp") / rms.max(f64::MIN_POSITIVE);
            for (v, e) in x.iter_mut().zip(&env) {
                *v *= a * e;
            }
            x
        }
        NoiseKind::Blink => {
            let width = ((p("width") * fs).round() as usize).max(2);
            let bump = raised_cosine(width);
            let gap = Exp::new(p("rate") / 60.0).map_err(|e| Error::invalid(e.to_string()))?;
            let mut x = vec![0.0; n];
            let mut at = 0.0;
            loop {
                at += gap.sample(&mut rng);
                let start = (at * fs).round() as usize;
                if start >= n {
                    break;
                }
                for (v, b) in x[start..].iter_mut().zip(&bump) {
                    *v += p("amp") * b;
                }
            }
            x
        }
    };
    Signal::new(samples, fs)
}

/// Unipolar raised-cosine bump `0.5 (1 - cos(2 pi k / (w - 1)))`.
pub fn raised_cosine(width: usize) -> Vec<f64> {
    let d = (width.max(2) - 1) as f64;
    (0..width).map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / d).cos())).collect()
}

/// On/off gate: one burst of `duty * period` seconds per period at a random
/// offset, with raised-cosine edges over 10% of the burst.
fn burst_envelope(n: usize, fs: f64, duty: f64, period: f64, rng: &mut impl Rng) -> Vec<f64> {
    if duty >= 1.0 {
        return vec![1.0; n];
    }
    let per = ((period * fs).round() as usize).max(2);
    let on = ((duty * per as f64).round() as usize).clamp(1, per);
    let taper = (on / 10).max(1);
    let mut env = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let offset = rng.random_range(0..=per - on);
        for k in 0..on {
            let idx = start + offset + k;
            if idx >= n {
                break;
            }
            let edge = k.min(on - 1 - k);
            env[idx] = if edge >= taper {
                1.0
            } else {
                0.5 * (1.0 - (PI * (edge as f64 + 0.5) / taper as f64).cos())
            };
        }
        start += per;
    }
    env
}

/// Bookkeeping of a semi-simulated mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    pub target_snr_db: f64,
    pub achieved_snr_db: f64,
    pub noise_scale: f64,
    pub spec: Option<NoiseSpec>,
}

/// Adds `noise` to `clean` scaled so the mix has exactly `snr_db`.
/// `f64::INFINITY` leaves the clean signal untouched.
pub fn mix_at_snr(clean: &Signal, noise: &Signal, snr_db: f64) -> Result<(Signal, MixReport)> {
    if clean.len() != noise.len() {
        return Err(Error::ShapeMismatch(format!(
            "clean has {} samples, noise has {}",
            clean.len(),
            noise.len()
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("invalid target SNR {snr_db}")));
    }
    let pc = clean.power();
    let pn = noise.power();
    if pc == 0.0 {
        return Err(Error::DegenerateInput("clean signal is all zero".into()));
    }
    if pn == 0.0 {
        return Err(Error::DegenerateInput("noise signal is all zero".into()));
    }
    let scale = if snr_db == f64::INFINITY {
        0.0
    } else {
        (pc / (pn * 10f64.powf(snr_db / 10.0))).sqrt()
    };
    let mixed: Vec<f64> = clean
        .samples()
        .iter()
        .zip(noise.samples())
        .map(|(c, v)| c + scale * v)
        .collect();
    let out = clean.with_samples(mixed)?;
    let achieved = snr_db_of(clean.samples(), out.samples());
    Ok((
        out,
        MixReport {
            target_snr_db: snr_db,
            achieved_snr_db: achieved,
            noise_scale: scale,
            spec: None,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `+inf` when the test signal equals the clean one.
    pub snr_db: f64,
    pub rmse: f64,
    pub corr: f64,
    /// Set when either input is constant and `corr` was reported as 0.
    pub corr_degenerate: bool,
}

pub fn compute_metrics(clean: &Signal, test: &Signal) -> Result<Metrics> {
    metrics_of(clean.samples(), test.samples())
}

pub fn metrics_of(clean: &[f64], test: &[f64]) -> Result<Metrics> {
    if clean.len() != test.len() {
        return Err(Error::ShapeMismatch(format!(
            "clean has {} samples, test has {}",
            clean.len(),
            test.len()
        )));
    }
    if clean.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: clean.len(),
        });
    }
    let err: Vec<f64> = clean.iter().zip(test).map(|(c, t)| t - c).collect();
    let (corr, corr_degenerate) = pearson(clean, test);
    Ok(Metrics {
        snr_db: snr_db_of(clean, test),
        rmse: power(&err).sqrt(),
        corr,
        corr_degenerate,
    })
}

fn snr_db_of(clean: &[f64], test: &[f64]) -> f64 {
    let pe = clean.iter().zip(test).map(|(c, t)| (t - c) * (t - c)).sum::<f64>() / clean.len() as f64;
    if pe == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (power(clean) / pe).log10()
}

/// Pearson correlation; `(0, true)` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> (f64, bool) {
    let n = a.len().min(b.len());
    if n < 2 {
        return (0.0, true);
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return (0.0, true);
    }
    ((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0), false)
}

/// Channel names of the four-electrode headset layout.
pub const MUSE_CHANNELS: [&str; 4] = ["TP9", "AF7", "AF8", "TP10"];

/// Seeded clean EEG surrogate: per channel a sum of theta, alpha and beta
/// tones with random phases and slowly modulated amplitudes.
pub fn clean_surrogate(n_channels: usize, n: usize, fs: f64, seed: u64) -> Result<Recording> {
    let names: Vec<String> = (0..n_channels)
        .map(|c| {
            MUSE_CHANNELS
                .get(c)
                .map_or_else(|| format!("CH{}", c + 1), |s| s.to_string())
        })
        .collect();
    let data = (0..n_channels)
        .map(|c| {
            let mut rng = rng::substream(seed, "clean", c as u64);
            let tones = [(6.0, 0.6), (10.0, 1.0), (18.0, 0.4)];
            let parts: Vec<(f64, f64, f64, f64)> = tones
                .iter()
                .map(|&(f, a)| {
                    let f = f + rng.random_range(-0.5..0.5);
                    (f, a, rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    parts
                        .iter()
                        .map(|&(f, a, ph, mph)| {
                            a * (1.0 + 0.3 * (2.0 * PI * 0.2 * t + mph).sin()) * (2.0 * PI * f * t + ph).sin()
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    Recording::from_samples(data, names, fs)
}
