//! EMD followed by moving-average smoothing of the high-frequency IMFs.

use super::{DenoiseReport, Method};
use crate::decompose::emd::{emd_with, EmdConfig};
use crate::error::Result;
use crate::signal::{moving_average_slice, Signal};
use crate::spectrum::dominant_frequency;

/// IMFs whose dominant frequency exceeds this are smoothed.
pub const HIGH_FREQ_IMF_HZ: f64 = 30.0;

pub fn denoise_emd_maf(signal: &Signal, ma_width: usize) -> Result<(Signal, DenoiseReport)> {
    let set = emd_with(signal, &EmdConfig::default())?;
    let mut out = set.residual.samples().to_vec();
    let mut report = DenoiseReport::new(Method::EmdMaf, signal.len())
        .param("ma_width", ma_width)
        .param("imfs", set.imfs.len())
        .param("high_freq_hz", HIGH_FREQ_IMF_HZ);
    for (i, imf) in set.imfs.iter().enumerate() {
        let f = dominant_frequency(imf.samples(), signal.fs());
        let part = if f > HIGH_FREQ_IMF_HZ {
            report.components_removed.push(format!("imf{i} ({f:.1} Hz) smoothed"));
            moving_average_slice(imf.samples(), ma_width)?
        } else {
            imf.samples().to_vec()
        };
        for (o, v) in out.iter_mut().zip(&part) {
            *o += v;
        }
    }
    Ok((signal.with_samples(out)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifact::dwt::median;
    use crate::noise::{compute_metrics, gen_noise, mix_at_snr, pearson, NoiseKind, NoiseSpec};
    use std::f64::consts::PI;

    const FS: f64 = 256.0;

    fn sine(f: f64, n: usize) -> Signal {
        Signal::new((0..n).map(|i| (2.0 * PI * f * i as f64 / FS).sin()).collect(), FS).unwrap()
    }

    #[test]
    fn emg_rmse_drops_thirty_percent() {
        let clean = sine(5.0, 1024);
        let ratios: Vec<f64> = (0..21)
            .map(|seed| {
                let spec = NoiseSpec::new(NoiseKind::EmgBurst, seed).with("duty", 1.0);
                let n = gen_noise(&spec, 1024, FS).unwrap();
                let (noisy, _) = mix_at_snr(&clean, &n, 0.0).unwrap();
                let (out, _) = denoise_emd_maf(&noisy, 7).unwrap();
                compute_metrics(&clean, &out).unwrap().rmse / compute_metrics(&clean, &noisy).unwrap().rmse
            })
            .collect();
        let med = median(&ratios);
        assert!(med <= 0.7, "median RMSE ratio {med}");
    }

    #[test]
    fn clean_low_sine_passes() {
        let clean = sine(5.0, 1024);
        let (out, _) = denoise_emd_maf(&clean, 7).unwrap();
        assert!(pearson(clean.samples(), out.samples()).0 >= 0.99);
    }

    #[test]
    fn ramp_passes_exactly() {
        let ramp = Signal::new((0..200).map(|i| i as f64 * 0.01).collect(), FS).unwrap();
        let (out, rep) = denoise_emd_maf(&ramp, 7).unwrap();
        assert_eq!(out, ramp);
        assert!(rep.components_removed.is_empty());
    }
}
