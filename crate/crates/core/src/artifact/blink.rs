//! Blink removal by template matching.

use super::{DenoiseReport, Method};
use crate::error::{Error, Result};
use crate::signal::{Recording, Signal};

/// Normalized cross-correlation above which a blink is declared.
pub const BLINK_NCC_THRESHOLD: f64 = 0.7;

/// Detects blinks on the frontal channels and subtracts a least-squares
/// scaled copy of `template` from every channel at each event.
pub fn remove_blink_template(
    rec: &Recording,
    template: &Signal,
    frontal_channels: &[String],
) -> Result<(Recording, DenoiseReport)> {
    let m = template.len();
    if m >= rec.len() {
        return Err(Error::invalid(format!(
            "template ({m} samples) must be shorter than the recording ({})",
            rec.len()
        )));
    }
    if frontal_channels.is_empty() {
        return Err(Error::invalid("at least one frontal channel is required"));
    }
    let t = template.samples();
    let tm = t.iter().sum::<f64>() / m as f64;
    let tc: Vec<f64> = t.iter().map(|v| v - tm).collect();
    let tnorm = tc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if tnorm == 0.0 {
        return Err(Error::DegenerateInput("blink template is constant".into()));
    }

    let lags = rec.len() - m + 1;
    let mut score = vec![f64::NEG_INFINITY; lags];
    for name in frontal_channels {
        let ch = rec.channel(name).ok_or_else(|| Error::UnknownChannel(name.clone()))?;
        for (s, v) in score.iter_mut().zip(ncc(ch.samples(), &tc, tnorm)) {
            *s = s.max(v);
        }
    }
    let events = pick_peaks(&score, BLINK_NCC_THRESHOLD, m);

    let mut report = DenoiseReport::new(Method::BlinkTemplate, rec.len())
        .param("template_len", m)
        .param("threshold", BLINK_NCC_THRESHOLD)
        .param("events", events.len());
    report
        .components_removed
        .extend(events.iter().map(|e| format!("blink@{e} (ncc {:.3})", score[*e])));
    if events.is_empty() {
        return Ok((rec.clone(), report));
    }

    let cleaned = rec.map_channels(|s| {
        let mut x = s.samples().to_vec();
        for &e in &events {
            let w = &x[e..e + m];
            let wm = w.iter().sum::<f64>() / m as f64;
            // Least-squares fit of a * template + b over the window.
            let a = w.iter().zip(&tc).map(|(v, c)| (v - wm) * c).sum::<f64>() / (tnorm * tnorm);
            for (v, tv) in x[e..e + m].iter_mut().zip(t) {
                *v -= a * tv;
            }
        }
        s.with_samples(x)
    })?;
    Ok((cleaned, report))
}

fn ncc(x: &[f64], tc: &[f64], tnorm: f64) -> Vec<f64> {
    let m = tc.len();
    (0..=x.len() - m)
        .map(|lag| {
            let w = &x[lag..lag + m];
            let wm = w.iter().sum::<f64>() / m as f64;
            let (mut num, mut ss) = (0.0, 0.0);
            for (v, c) in w.iter().zip(tc) {
                num += (v - wm) * c;
                ss += (v - wm) * (v - wm);
            }
            if ss == 0.0 {
                0.0
            } else {
                num / (ss.sqrt() * tnorm)
            }
        })
        .collect()
}

/// Greedy non-maximum suppression: strongest lags first, each claiming
/// `spacing` samples on either side.
fn pick_peaks(score: &[f64], thresh: f64, spacing: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..score.len()).filter(|&i| score[i] > thresh).collect();
    cand.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = Vec::new();
    for c in cand {
        if picked.iter().all(|&p| p.abs_diff(c) >= spacing) {
            picked.push(c);
        }
    }
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{metrics_of, raised_cosine};
    use std::f64::consts::PI;

    const FS: f64 = 256.0;

    fn clean(n: usize) -> Recording {
        let data = (0..3)
            .map(|c| {
                (0..n)
                    .map(|i| (2.0 * PI * (9.0 + c as f64) * i as f64 / FS + c as f64).sin())
                    .collect()
            })
            .collect();
        Recording::from_samples(data, vec!["AF7".into(), "AF8".into(), "TP9".into()], FS).unwrap()
    }

    #[test]
    fn inserted_blinks_found_and_removed() {
        let n = 2560;
        let base = clean(n);
        let tpl = raised_cosine(77);
        let events = [300usize, 1100, 2000];
        let gains = [[6.0, 5.0, 1.5], [8.0, 7.0, 2.0], [5.0, 6.0, 1.0]];
        let noisy = Recording::from_samples(
            (0..3)
                .map(|c| {
                    let mut x = base.channels()[c].samples().to_vec();
                    for (e, g) in events.iter().zip(&gains) {
                        for (k, t) in tpl.iter().enumerate() {
                            x[e + k] += g[c] * t;
                        }
                    }
                    x
                })
                .collect(),
            base.channel_names().to_vec(),
            FS,
        )
        .unwrap();
        let template = Signal::new(tpl.clone(), FS).unwrap();
        let (out, rep) = remove_blink_template(&noisy, &template, &["AF7".into(), "AF8".into()]).unwrap();
        let found: Vec<usize> = rep
            .components_removed
            .iter()
            .map(|s| s[6..s.find(' ').unwrap()].parse().unwrap())
            .collect();
        assert_eq!(found.len(), 3, "{found:?}");
        for (f, e) in found.iter().zip(&events) {
            assert!(f.abs_diff(*e) <= 5, "{f} vs {e}");
        }
        for c in 0..3 {
            for &e in &events {
                let win = e..e + tpl.len();
                let cl = &base.channels()[c].samples()[win.clone()];
                let before = metrics_of(cl, &noisy.channels()[c].samples()[win.clone()]).unwrap().rmse;
                let after = metrics_of(cl, &out.channels()[c].samples()[win]).unwrap().rmse;
                assert!(after <= 0.3 * before, "ch {c} event {e}: {after} vs {before}");
            }
        }
    }

    #[test]
    fn no_blink_is_identity() {
        let base = clean(2560);
        let template = Signal::new(raised_cosine(77), FS).unwrap();
        let (out, rep) = remove_blink_template(&base, &template, &["AF7".into()]).unwrap();
        assert_eq!(out, base);
        assert!(rep.components_removed.is_empty());
    }

    #[test]
    fn errors() {
        let base = clean(600);
        let template = Signal::new(raised_cosine(77), FS).unwrap();
        assert!(matches!(
            remove_blink_template(&base, &template, &["Fp1".into()]),
            Err(Error::UnknownChannel(_))
        ));
        let long = Signal::new(vec![1.0; 600], FS).unwrap();
        assert!(remove_blink_template(&base, &long, &["AF7".into()]).is_err());
    }
}
