//! Seeded Monte-Carlo benchmark of denoising methods on semi-simulated data.
//!
//! Each cell draws a clean multichannel surrogate, mixes in one contaminant
//! at a target SNR, denoises, and scores the output against the clean
//! signal. Rows aggregate cells over seeds by median and interquartile range.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{denoise_recording, Method, MethodParams};
use crate::error::{Error, Result};
use crate::noise::{clean_surrogate, gen_noise, metrics_of, mix_at_snr, NoiseKind, NoiseSpec};
use crate::rng;
use crate::signal::Recording;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    /// Contaminant templates; their seeds are replaced per cell.
    pub noises: Vec<NoiseSpec>,
    pub snrs_db: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_channels: usize,
    pub duration_s: f64,
    pub fs: f64,
    /// Mix one contaminant realization into every channel instead of an
    /// independent one per channel.
    pub shared_noise: bool,
    pub params: MethodParams,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Identity, Method::Dwt],
            noises: vec![NoiseSpec::new(NoiseKind::Awgn, 0)],
            snrs_db: vec![0.0],
            seeds: (0..20).collect(),
            n_channels: 4,
            duration_s: 4.0,
            fs: 256.0,
            shared_noise: false,
            params: MethodParams::default(),
            threads: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.noises.is_empty() || self.snrs_db.is_empty() {
            return Err(Error::invalid("bench grid needs at least one method, noise and SNR"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("bench needs at least one seed"));
        }
        if self.n_channels == 0 || !(self.duration_s > 0.0) {
            return Err(Error::invalid("bench needs channels and a positive duration"));
        }
        if self.snrs_db.iter().any(|s| s.is_nan()) {
            return Err(Error::invalid("SNR levels must not be NaN"));
        }
        for spec in &self.noises {
            spec.validate(self.fs)?;
        }
        Ok(())
    }

    fn n_samples(&self) -> usize {
        (self.duration_s * self.fs).round() as usize
    }
}

/// One (method, noise, SNR, seed) run, averaged over channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub method: String,
    pub noise: String,
    pub snr_db: f64,
    pub seed: u64,
    /// Set when the method returned an error; the metrics are then NaN.
    pub error: Option<String>,
    pub snr_in_db: f64,
    pub snr_out_db: f64,
    pub snr_gain_db: f64,
    pub rmse_in: f64,
    pub rmse_out: f64,
    /// `1 - rmse_out / rmse_in`.
    pub rmse_reduction: f64,
    pub corr_out: f64,
}

/// Median and interquartile range over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub iqr: f64,
}

impl Spread {
    /// Linear-interpolated quartiles over the finite values.
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self {
                median: f64::NAN,
                iqr: f64::NAN,
            };
        }
        v.sort_by(f64::total_cmp);
        Self {
            median: quantile(&v, 0.5),
            iqr: quantile(&v, 0.75) - quantile(&v, 0.25),
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub noise: String,
    pub snr_db: f64,
    pub n_seeds: usize,
    pub n_failed: usize,
    pub snr_gain_db: Spread,
    pub rmse_reduction: Spread,
    pub corr_out: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub cells: Vec<BenchCell>,
    /// Largest gap between a target SNR and the SNR measured on the mix.
    pub max_mix_error_db: f64,
}

struct Mixed {
    clean: Recording,
    noisy: Recording,
    mix_error_db: f64,
}

fn noise_seed(seed: u64, kind: NoiseKind, channel: u64) -> u64 {
    rng::substream(seed, &format!("bench/{kind}"), channel).random()
}

fn mix_cell(cfg: &BenchConfig, template: &NoiseSpec, snr_db: f64, seed: u64) -> Result<Mixed> {
    let n = cfg.n_samples();
    let clean = clean_surrogate(cfg.n_channels, n, cfg.fs, seed)?;
    let mut mix_error_db: f64 = 0.0;
    let mut shared = None;
    let mut noisy = Vec::with_capacity(cfg.n_channels);
    for (c, s) in clean.channels().iter().enumerate() {
        let ch = if cfg.shared_noise { 0 } else { c as u64 };
        let noise = match (&shared, cfg.shared_noise) {
            (Some(n), true) => Clone::clone(n),
            _ => {
                let mut spec = template.clone();
                spec.seed = noise_seed(seed, template.kind, ch);
                let g = gen_noise(&spec, n, cfg.fs)?;
                shared = Some(g.clone());
                g
            }
        };
        let (mixed, report) = mix_at_snr(s, &noise, snr_db)?;
        let measured = metrics_of(s.samples(), mixed.samples())?.snr_db;
        if snr_db.is_finite() {
            mix_error_db = mix_error_db.max((measured - report.target_snr_db).abs());
        }
        noisy.push(mixed);
    }
    let noisy = Recording::new(noisy, clean.channel_names().to_vec())?;
    Ok(Mixed {
        clean,
        noisy,
        mix_error_db,
    })
}

fn channel_mean(rec_a: &Recording, rec_b: &Recording, f: impl Fn(&crate::noise::Metrics) -> f64) -> Result<f64> {
    let mut sum = 0.0;
    for (a, b) in rec_a.channels().iter().zip(rec_b.channels()) {
        sum += f(&metrics_of(a.samples(), b.samples())?);
    }
    Ok(sum / rec_a.n_channels() as f64)
}

fn score(method: Method, noise: &NoiseSpec, snr_db: f64, seed: u64, mixed: &Mixed, p: &MethodParams) -> Result<BenchCell> {
    let mut cell = BenchCell {
        method: method.id().to_string(),
        noise: noise.kind.as_str().to_string(),
        snr_db,
        seed,
        error: None,
        snr_in_db: channel_mean(&mixed.clean, &mixed.noisy, |m| m.snr_db)?,
        snr_out_db: f64::NAN,
        snr_gain_db: f64::NAN,
        rmse_in: channel_mean(&mixed.clean, &mixed.noisy, |m| m.rmse)?,
        rmse_out: f64::NAN,
        rmse_reduction: f64::NAN,
        corr_out: f64::NAN,
    };
    match denoise_recording(&mixed.noisy, method, p) {
        Ok((out, _)) => {
            cell.snr_out_db = channel_mean(&mixed.clean, &out, |m| m.snr_db)?;
            cell.snr_gain_db = cell.snr_out_db - cell.snr_in_db;
            cell.rmse_out = channel_mean(&mixed.clean, &out, |m| m.rmse)?;
            cell.rmse_reduction = 1.0 - cell.rmse_out / cell.rmse_in;
            cell.corr_out = channel_mean(&mixed.clean, &out, |m| m.corr)?;
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    Ok(cell)
}

/// Runs one (noise, SNR, seed) mix and scores every method on it. A mix
/// that cannot be built (say, a blink draw with no blinks) fails every
/// method's cell instead of aborting the grid.
fn run_mix(cfg: &BenchConfig, noise: &NoiseSpec, snr_db: f64, seed: u64) -> Result<(Vec<BenchCell>, f64)> {
    let mixed = match mix_cell(cfg, noise, snr_db, seed) {
        Ok(m) => m,
        Err(e) => {
            let cells = cfg
                .methods
                .iter()
                .map(|m| BenchCell {
                    method: m.id().to_string(),
                    noise: noise.kind.as_str().to_string(),
                    snr_db,
                    seed,
                    error: Some(format!("mix: {e}")),
                    snr_in_db: f64::NAN,
                    snr_out_db: f64::NAN,
                    snr_gain_db: f64::NAN,
                    rmse_in: f64::NAN,
                    rmse_out: f64::NAN,
                    rmse_reduction: f64::NAN,
                    corr_out: f64::NAN,
                })
                .collect();
            return Ok((cells, 0.0));
        }
    };
    let cells = cfg
        .methods
        .iter()
        .map(|&m| score(m, noise, snr_db, seed, &mixed, &cfg.params))
        .collect::<Result<Vec<_>>>()?;
    Ok((cells, mixed.mix_error_db))
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let jobs: Vec<(&NoiseSpec, f64, u64)> = cfg
        .noises
        .iter()
        .flat_map(|n| cfg.snrs_db.iter().flat_map(move |&s| cfg.seeds.iter().map(move |&seed| (n, s, seed))))
        .collect();
    let threads = match cfg.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .min(jobs.len())
    .max(1);
    let chunk = jobs.len().div_ceil(threads);
    let outputs: Vec<Result<Vec<(Vec<BenchCell>, f64)>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&(n, s, seed)| run_mix(cfg, n, s, seed)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    });

    let mut cells = Vec::with_capacity(jobs.len() * cfg.methods.len());
    let mut max_mix_error_db: f64 = 0.0;
    for part in outputs {
        for (c, e) in part? {
            cells.extend(c);
            max_mix_error_db = max_mix_error_db.max(e);
        }
    }
    cells.sort_by(|a, b| {
        (&a.method, &a.noise)
            .cmp(&(&b.method, &b.noise))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.seed.cmp(&b.seed))
    });

    let rows = cells
        .chunk_by(|a, b| a.method == b.method && a.noise == b.noise && a.snr_db == b.snr_db)
        .map(|group| {
            let col = |f: fn(&BenchCell) -> f64| Spread::of(&group.iter().map(f).collect::<Vec<_>>());
            BenchRow {
                method: group[0].method.clone(),
                noise: group[0].noise.clone(),
                snr_db: group[0].snr_db,
                n_seeds: group.len(),
                n_failed: group.iter().filter(|c| c.error.is_some()).count(),
                snr_gain_db: col(|c| c.snr_gain_db),
                rmse_reduction: col(|c| c.rmse_reduction),
                corr_out: col(|c| c.corr_out),
            }
        })
        .collect();
    Ok(BenchResult {
        rows,
        cells,
        max_mix_error_db,
    })
}

impl BenchResult {
    pub fn row(&self, method: &str, noise: &str, snr_db: f64) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.noise == noise && r.snr_db == snr_db)
    }

    /// One plain-text table per noise kind.
    pub fn tables(&self) -> String {
        let mut out = String::new();
        let mut noises: Vec<&str> = self.rows.iter().map(|r| r.noise.as_str()).collect();
        noises.sort_unstable();
        noises.dedup();
        for noise in noises {
            let _ = writeln!(out, "noise: {noise}");
            let _ = writeln!(
                out,
                "{:<14} {:>8} {:>6} {:>18} {:>18} {:>18}",
                "method", "snr_db", "fail", "gain_db (iqr)", "rmse_red (iqr)", "corr (iqr)"
            );
            for r in self.rows.iter().filter(|r| r.noise == noise) {
                let fmt = |s: Spread| format!("{:.3} ({:.3})", s.median, s.iqr);
                let _ = writeln!(
                    out,
                    "{:<14} {:>8.1} {:>6} {:>18} {:>18} {:>18}",
                    r.method,
                    r.snr_db,
                    r.n_failed,
                    fmt(r.snr_gain_db),
                    fmt(r.rmse_reduction),
                    fmt(r.corr_out)
                );
            }
            out.push('\n');
        }
        out
    }

    pub fn write_leaderboard_csv(&self, path: &Path) -> Result<()> {
        let to_err = |e: csv::Error| Error::Format {
            file: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(to_err)?;
        w.write_record([
            "method",
            "noise",
            "snr_db",
            "n_seeds",
            "n_failed",
            "snr_gain_median",
            "snr_gain_iqr",
            "rmse_reduction_median",
            "rmse_reduction_iqr",
            "corr_median",
            "corr_iqr",
        ])
        .map_err(to_err)?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                r.noise.clone(),
                format!("{:?}", r.snr_db),
                r.n_seeds.to_string(),
                r.n_failed.to_string(),
                format!("{:?}", r.snr_gain_db.median),
                format!("{:?}", r.snr_gain_db.iqr),
                format!("{:?}", r.rmse_reduction.median),
                format!("{:?}", r.rmse_reduction.iqr),
                format!("{:?}", r.corr_out.median),
                format!("{:?}", r.corr_out.iqr),
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
