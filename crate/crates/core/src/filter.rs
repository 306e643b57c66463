//! Zero-phase IIR filtering with Butterworth and notch designs.
//!
//! Filters are realized as cascaded second-order sections (SOS) and applied
//! forward-backward, so the effective magnitude response is the square of
//! the single-pass response and the phase is zero. Edges are handled with
//! odd reflection padding plus steady-state initial conditions.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Bandpass,
    Lowpass,
    Highpass,
    Notch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// One corner (lowpass, highpass, notch centre) or two (bandpass), Hz.
    pub edges: Vec<f64>,
    /// Prototype order. A bandpass of order `n` has `2n` poles.
    pub order: usize,
    /// Quality factor, notch only.
    pub notch_q: f64,
}

impl FilterSpec {
    pub fn bandpass(low: f64, high: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Bandpass,
            edges: vec![low, high],
            order,
            notch_q: 0.0,
        }
    }

    pub fn lowpass(corner: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Lowpass,
            edges: vec![corner],
            order,
            notch_q: 0.0,
        }
    }

    pub fn highpass(corner: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Highpass,
            edges: vec![corner],
            order,
            notch_q: 0.0,
        }
    }

    pub fn notch(freq: f64, q: f64) -> Self {
        Self {
            kind: FilterKind::Notch,
            edges: vec![freq],
            order: 2,
            notch_q: q,
        }
    }

    /// Default EEG preprocessing band: 0.5-45 Hz, order 4.
    pub fn eeg_default() -> Self {
        Self::bandpass(0.5, 45.0, 4)
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        let nyq = fs / 2.0;
        let want = if self.kind == FilterKind::Bandpass { 2 } else { 1 };
        if self.edges.len() != want {
            return Err(Error::InvalidSpec(format!(
                "{:?} needs {want} corner frequencies, got {}",
                self.kind,
                self.edges.len()
            )));
        }
        for &e in &self.edges {
            if !(e > 0.0 && e < nyq) {
                return Err(Error::InvalidSpec(format!(
                    "corner {e} Hz must lie strictly inside (0, {nyq}) Hz"
                )));
            }
        }
        if self.kind == FilterKind::Bandpass && self.edges[0] >= self.edges[1] {
            return Err(Error::InvalidSpec(format!(
                "bandpass low edge {} must be below high edge {}",
                self.edges[0], self.edges[1]
            )));
        }
        if self.order == 0 {
            return Err(Error::InvalidSpec("order must be positive".into()));
        }
        if self.kind == FilterKind::Notch && !(self.notch_q > 0.0 && self.notch_q.is_finite()) {
            return Err(Error::InvalidSpec(format!("notch Q must be positive, got {}", self.notch_q)));
        }
        Ok(())
    }
}

/// Second-order section coefficients `[b0, b1, b2, 1, a1, a2]`.
pub type Section = [f64; 6];

#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Section>,
}

/// Designs the SOS cascade for `spec` at sampling rate `fs`.
pub fn design(spec: &FilterSpec, fs: f64) -> Result<Sos> {
    spec.validate(fs)?;
    if spec.kind == FilterKind::Notch {
        return Ok(notch_section(spec.edges[0], spec.notch_q, fs));
    }
    let n = spec.order;
    let fs2 = 2.0 * fs;
    let warp = |f: f64| fs2 * (PI * f / fs).tan();
    let proto: Vec<Complex64> = (0..n)
        .map(|k| {
            let m = -(n as f64) + 1.0 + 2.0 * k as f64;
            -Complex64::from_polar(1.0, PI * m / (2.0 * n as f64))
        })
        .collect();

    let (zeros, poles, gain) = match spec.kind {
        FilterKind::Lowpass => {
            let wc = warp(spec.edges[0]);
            (vec![], proto.iter().map(|p| p * wc).collect::<Vec<_>>(), wc.powi(n as i32))
        }
        FilterKind::Highpass => {
            let wc = warp(spec.edges[0]);
            let poles: Vec<Complex64> = proto.iter().map(|p| wc / p).collect();
            let prod: Complex64 = proto.iter().map(|p| -p).product();
            (vec![Complex64::new(0.0, 0.0); n], poles, (1.0 / prod).re)
        }
        FilterKind::Bandpass => {
            let (w1, w2) = (warp(spec.edges[0]), warp(spec.edges[1]));
            let bw = w2 - w1;
            let w0sq = w1 * w2;
            let mut poles = Vec::with_capacity(2 * n);
            for p in &proto {
                let half = p * (bw / 2.0);
                let disc = (half * half - w0sq).sqrt();
                poles.push(half + disc);
                poles.push(half - disc);
            }
            (vec![Complex64::new(0.0, 0.0); n], poles, bw.powi(n as i32))
        }
        FilterKind::Notch => unreachable!(),
    };

    // Bilinear transform of the analog zpk.
    let fs2c = Complex64::new(fs2, 0.0);
    let num: Complex64 = zeros.iter().map(|z| fs2c - z).product();
    let den: Complex64 = poles.iter().map(|p| fs2c - p).product();
    let kd = gain * (num / den).re;
    let mut zd: Vec<Complex64> = zeros.iter().map(|z| (fs2c + z) / (fs2c - z)).collect();
    zd.resize(poles.len(), Complex64::new(-1.0, 0.0));
    let pd: Vec<Complex64> = poles.iter().map(|p| (fs2c + p) / (fs2c - p)).collect();

    Ok(zpk_to_sos(&zd, &pd, kd))
}

fn notch_section(f0: f64, q: f64, fs: f64) -> Sos {
    let w0 = 2.0 * PI * f0 / fs;
    let bw = w0 / q;
    let g = 1.0 / (1.0 + (bw / 2.0).tan());
    let c = w0.cos();
    Sos {
        sections: vec![[g, -2.0 * g * c, g, 1.0, -2.0 * g * c, 2.0 * g - 1.0]],
    }
}

/// Groups conjugate pole pairs into sections, poles nearest the unit circle last.
fn zpk_to_sos(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> Sos {
    const IMAG_EPS: f64 = 1e-12;
    let mut pole_quads: Vec<[f64; 2]> = Vec::new();
    let mut real_poles: Vec<f64> = Vec::new();
    for p in poles {
        if p.im.abs() <= IMAG_EPS * p.norm().max(1.0) {
            real_poles.push(p.re);
        } else if p.im > 0.0 {
            pole_quads.push([-2.0 * p.re, p.norm_sqr()]);
        }
    }
    real_poles.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    for pair in real_poles.chunks(2) {
        match pair {
            [a, b] => pole_quads.push([-(a + b), a * b]),
            [a] => pole_quads.push([-a, 0.0]),
            _ => unreachable!(),
        }
    }
    // Radius of the section's poles: sqrt(a2) for a conjugate pair.
    pole_quads.sort_by(|a, b| a[1].abs().total_cmp(&b[1].abs()));

    // All designed zeros are real (at +1 or -1); interleave them so each
    // section of a bandpass receives one of each.
    let mut plus: Vec<f64> = Vec::new();
    let mut minus: Vec<f64> = Vec::new();
    for z in zeros {
        if z.re >= 0.0 {
            plus.push(z.re);
        } else {
            minus.push(z.re);
        }
    }
    let mut ordered = Vec::with_capacity(zeros.len());
    while !plus.is_empty() || !minus.is_empty() {
        if let Some(z) = plus.pop() {
            ordered.push(z);
        }
        if let Some(z) = minus.pop() {
            ordered.push(z);
        }
    }

    let n_sections = pole_quads.len();
    let mut sections = Vec::with_capacity(n_sections);
    let mut zi = ordered.into_iter();
    for (i, a) in pole_quads.iter().enumerate() {
        let b = match (zi.next(), zi.next()) {
            (Some(z1), Some(z2)) => [1.0, -(z1 + z2), z1 * z2],
            (Some(z1), None) => [1.0, -z1, 0.0],
            _ => [1.0, 0.0, 0.0],
        };
        let k = if i == 0 { gain } else { 1.0 };
        sections.push([k * b[0], k * b[1], k * b[2], 1.0, a[0], a[1]]);
    }
    Sos { sections }
}

impl Sos {
    pub fn order(&self) -> usize {
        self.sections
            .iter()
            .map(|s| if s[5] == 0.0 { 1 } else { 2 })
            .sum()
    }

    /// Single-pass complex response at `freq` Hz.
    pub fn response(&self, freq: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|s| (s[0] + s[1] * z1 + s[2] * z2) / (s[3] + s[4] * z1 + s[5] * z2))
            .product()
    }

    /// Steady-state initial conditions for a unit step input.
    fn step_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = (s[0] + s[1] + s[2]) / (1.0 + s[4] + s[5]);
                let z2 = s[2] - s[5] * g;
                let z1 = s[1] - s[4] * g + z2;
                let out = [scale * z1, scale * z2];
                scale *= g;
                out
            })
            .collect()
    }

    /// Causal filtering (transposed direct form II) from the given state.
    fn run(&self, x: &mut [f64], state: &[[f64; 2]]) {
        for (s, st) in self.sections.iter().zip(state) {
            let (mut z1, mut z2) = (st[0], st[1]);
            for v in x.iter_mut() {
                let u = *v;
                let y = s[0] * u + z1;
                z1 = s[1] * u - s[4] * y + z2;
                z2 = s[2] * u - s[5] * y;
                *v = y;
            }
        }
    }

    /// Forward-backward filtering of a raw slice.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let order = self.order();
        let n = x.len();
        if n < 3 * order || n < 2 {
            return Err(Error::TooShort {
                needed: (3 * order).max(2),
                got: n,
            });
        }
        let trivial_b = self.sections.iter().filter(|s| s[2] == 0.0).count();
        let trivial_a = self.sections.iter().filter(|s| s[5] == 0.0).count();
        let padlen = (3 * (2 * self.sections.len() + 1 - trivial_b.min(trivial_a))).min(n - 1);

        let mut ext = Vec::with_capacity(n + 2 * padlen);
        ext.extend((1..=padlen).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=padlen).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.step_state();
        let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

        let st = scaled(ext[0]);
        self.run(&mut ext, &st);
        ext.reverse();
        let st = scaled(ext[0]);
        self.run(&mut ext, &st);
        ext.reverse();
        Ok(ext[padlen..padlen + n].to_vec())
    }
}

/// Zero-phase application of `spec` to `signal`.
pub fn apply_filter(signal: &Signal, spec: &FilterSpec) -> Result<Signal> {
    let sos = design(spec, signal.fs())?;
    let y = sos.filtfilt(signal.samples())?;
    signal.with_samples(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 256.0;

    fn check_response(spec: FilterSpec, freqs: &[f64], expected: &[f64]) {
        let sos = design(&spec, FS).unwrap();
        for (&f, &e) in freqs.iter().zip(expected) {
            let got = sos.response(f, FS).norm();
            assert!(
                (got - e).abs() < 1e-9 * e.max(1e-6) + 1e-12,
                "{spec:?} at {f} Hz: got {got}, expected {e}"
            );
        }
    }

    // Reference magnitudes from scipy.signal.butter / iirnotch + sosfreqz.
    #[test]
    fn responses_match_reference_designs() {
        check_response(
            FilterSpec::bandpass(8.0, 13.0, 4),
            &[5.0, 8.0, 10.0, 13.0, 20.0],
            &[0.010172730244743756, 0.707106781186554, 0.999999998926538, 0.7071067811865477, 0.01234718784050419],
        );
        check_response(
            FilterSpec::lowpass(30.0, 3),
            &[10.0, 30.0, 60.0],
            &[0.9994661452296413, 0.7071067811865474, 0.07686386634610061],
        );
        check_response(
            FilterSpec::highpass(1.0, 2),
            &[0.5, 1.0, 5.0],
            &[0.24251843637604326, 0.7071067811865278, 0.9992047990720333],
        );
        check_response(
            FilterSpec::eeg_default(),
            &[0.25, 0.5, 10.0, 45.0, 60.0],
            &[0.06053559514809667, 0.7071067811845175, 0.9999998580642736, 0.707106781186547, 0.20464262183126922],
        );
        check_response(
            FilterSpec::notch(50.0, 30.0),
            &[10.0, 49.0, 51.0],
            &[0.9999691873784338, 0.769630281977263, 0.7668644586206033],
        );
        let notch = design(&FilterSpec::notch(50.0, 30.0), FS).unwrap();
        assert!(notch.response(50.0, FS).norm() < 1e-12);
    }

    #[test]
    fn section_layout() {
        let sos = design(&FilterSpec::bandpass(8.0, 13.0, 4), FS).unwrap();
        assert_eq!(sos.sections.len(), 4);
        assert_eq!(sos.order(), 8);
        let sos = design(&FilterSpec::lowpass(30.0, 3), FS).unwrap();
        assert_eq!(sos.sections.len(), 2);
        assert_eq!(sos.order(), 3);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(design(&FilterSpec::lowpass(128.0, 4), FS), Err(Error::InvalidSpec(_))));
        assert!(matches!(design(&FilterSpec::bandpass(13.0, 8.0, 4), FS), Err(Error::InvalidSpec(_))));
        assert!(matches!(design(&FilterSpec::notch(50.0, 0.0), FS), Err(Error::InvalidSpec(_))));
        assert!(matches!(design(&FilterSpec::highpass(0.0, 2), FS), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn too_short() {
        let s = Signal::new(vec![1.0; 10], FS).unwrap();
        let err = apply_filter(&s, &FilterSpec::lowpass(30.0, 4)).unwrap_err();
        assert!(matches!(err, Error::TooShort { needed: 12, got: 10 }));
    }

    #[test]
    fn zero_in_zero_out() {
        let s = Signal::zeros(512, FS).unwrap();
        let y = apply_filter(&s, &FilterSpec::eeg_default()).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_passes_lowpass_exactly() {
        let s = Signal::new(vec![3.5; 300], FS).unwrap();
        let y = apply_filter(&s, &FilterSpec::lowpass(20.0, 4)).unwrap();
        for v in y.samples() {
            assert!((v - 3.5).abs() < 1e-9);
        }
    }
}
