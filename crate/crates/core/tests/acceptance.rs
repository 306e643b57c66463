//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The classification criterion needs the public emotion feature table; it
//! is read from `EEGSCRUB_EMOTIONS_CSV` or `data/emotions.csv` at the
//! workspace root. When neither exists the criterion is reported as FAIL
//! (data unavailable) without failing the run.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use eegscrub::artifact::{denoise_recording, Method, MethodParams};
use eegscrub::bench::{run_bench, BenchConfig, BenchResult};
use eegscrub::dataset::load_feature_csv;
use eegscrub::decompose::{dwt, dwt_forward, dwt_inverse, emd, ssa, ssa_decompose, ssa_reconstruct};
use eegscrub::filter::{apply_filter, FilterSpec};
use eegscrub::gru::{
    evaluate, evaluate_predictions, loss_and_grad, stratified_split, train_on_split, GruNet, LinearNet,
    ModelConfig, Net, Network, TrainConfig,
};
use eegscrub::noise::{clean_surrogate, gen_noise, mix_at_snr, NoiseKind, NoiseSpec};
use eegscrub::signal::power;
use eegscrub::spectrum::fft_real;
use eegscrub::{rng, Recording, Signal};

const FS: f64 = 256.0;
const SEEDS: u64 = 20;

enum Verdict {
    Pass,
    Fail,
    /// Cannot be evaluated in this environment.
    Unavailable,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_signal(n: usize, seed: u64) -> Signal {
    let mut r = rng::stream(seed, "acceptance/random");
    let x = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
    Signal::new(x, FS).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn reconstruction() -> Outcome {
    let t = Instant::now();
    let mut dwt_err: f64 = 0.0;
    for (i, n) in [37usize, 256, 1000, 1024].into_iter().enumerate() {
        let s = random_signal(n, i as u64);
        let levels = dwt::max_level(n, dwt::Wavelet::db4().filter_len()).max(1);
        let back = dwt_inverse(&dwt_forward(&s, levels).unwrap()).unwrap();
        let e = back.samples().iter().zip(s.samples()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        dwt_err = dwt_err.max(e);
    }
    let mut emd_err: f64 = 0.0;
    let mut ssa_err: f64 = 0.0;
    for seed in 0..100 {
        let s = random_signal(256, 1000 + seed);
        let imfs = emd(&s, 10, 0.2).unwrap();
        emd_err = emd_err.max(rel_err(&imfs.reconstruct(), s.samples()));
        let m = ssa_decompose(&s, ssa::default_window(s.len())).unwrap();
        let all: Vec<usize> = (0..m.components.len()).collect();
        ssa_err = ssa_err.max(rel_err(ssa_reconstruct(&m, &all).unwrap().samples(), s.samples()));
    }
    let el = t.elapsed();
    check(
        dwt_err < 1e-8 && emd_err < 1e-8 && ssa_err < 1e-8 && within(el, 30.0),
        format!("dwt max err {dwt_err:.2e}, emd rel {emd_err:.2e}, ssa rel {ssa_err:.2e} (< 1e-8); {el:.1?} (< 30 s)"),
    )
}

/// Amplitude of the FFT bin nearest `f` over an integer number of cycles.
fn tone_amplitude(x: &[f64], f: f64) -> f64 {
    let spec = fft_real(x);
    let k = (f * x.len() as f64 / FS).round() as usize;
    2.0 * spec[k].norm() / x.len() as f64
}

fn notch() -> Outcome {
    let n = 256 * 20;
    let tone = |f: f64| Signal::new((0..n).map(|i| (2.0 * PI * f * i as f64 / FS).sin()).collect(), FS).unwrap();
    let spec = FilterSpec::notch(50.0, 30.0);
    let gain_db = |f: f64| {
        let x = tone(f);
        let y = apply_filter(&x, &spec).unwrap();
        20.0 * (tone_amplitude(y.samples(), f) / tone_amplitude(x.samples(), f)).log10()
    };
    let (at_notch, at_alpha) = (gain_db(50.0), gain_db(10.0));
    check(
        at_notch <= -40.0 && at_alpha >= -3.0,
        format!("50 Hz gain {at_notch:.1} dB (<= -40), 10 Hz gain {at_alpha:.3} dB (>= -3)"),
    )
}

fn row_median(r: &BenchResult, method: &str, noise: &str, f: fn(&eegscrub::bench::BenchRow) -> f64) -> f64 {
    r.row(method, noise, 0.0).map_or(f64::NAN, f)
}

fn lms_residual_fraction(seed: u64) -> f64 {
    let n = 2048;
    let clean = clean_surrogate(1, n, FS, seed).unwrap();
    let c = &clean.channels()[0];
    let spec = NoiseSpec::new(NoiseKind::Powerline, rng::stream(seed, "acceptance/lms").random());
    let hum = gen_noise(&spec, n, FS).unwrap();
    let (noisy, _) = mix_at_snr(c, &hum, 0.0).unwrap();
    let rec = Recording::new(vec![noisy.clone()], vec!["TP9".into()]).unwrap();
    let (out, _) = denoise_recording(&rec, Method::CascadeLms, &MethodParams::default()).unwrap();
    let half = n / 2;
    let interference: Vec<f64> = noisy.samples()[half..].iter().zip(&c.samples()[half..]).map(|(a, b)| a - b).collect();
    let residual: Vec<f64> =
        out.channels()[0].samples()[half..].iter().zip(&c.samples()[half..]).map(|(a, b)| a - b).collect();
    (power(&residual) / power(&interference)).sqrt()
}

fn denoising() -> Outcome {
    let t = Instant::now();
    let cfg = BenchConfig {
        methods: vec![Method::Identity, Method::Dwt, Method::EmdMaf, Method::SsaMotion, Method::SsaCca],
        noises: vec![
            NoiseSpec::new(NoiseKind::Awgn, 0),
            NoiseSpec::new(NoiseKind::EmgBurst, 0).with("duty", 1.0),
            NoiseSpec::new(NoiseKind::BaselineWander, 0),
        ],
        snrs_db: vec![0.0],
        seeds: (0..SEEDS).collect(),
        duration_s: 8.0,
        ..BenchConfig::default()
    };
    let r = run_bench(&cfg).unwrap();
    let identity = row_median(&r, "identity", "awgn", |x| x.snr_gain_db.median);
    let dwt_gain = row_median(&r, "dwt", "awgn", |x| x.snr_gain_db.median);
    let emd_red = row_median(&r, "emd_maf", "emg_burst", |x| x.rmse_reduction.median);
    let ssa_corr = row_median(&r, "ssa_motion", "baseline_wander", |x| x.corr_out.median);
    let cca_red = row_median(&r, "ssa_cca", "emg_burst", |x| x.rmse_reduction.median);
    let mut lms: Vec<f64> = (0..SEEDS).map(lms_residual_fraction).collect();
    let lms = median(&mut lms);
    let el = t.elapsed();
    check(
        identity.abs() < 1e-9
            && dwt_gain >= 5.0
            && emd_red >= 0.30
            && ssa_corr >= 0.9
            && cca_red >= 0.30
            && lms < 0.10
            && within(el, 300.0),
        format!(
            "identity {identity:.1e} dB; dwt gain {dwt_gain:.2} dB (>= 5); emd_maf rmse -{:.0}% (>= 30%); \
             ssa_motion corr {ssa_corr:.3} (>= 0.9); ssa_cca rmse -{:.0}% (>= 30%); lms residual {:.1}% (< 10%); \
             {el:.1?} (< 300 s)",
            100.0 * emd_red,
            100.0 * cca_red,
            100.0 * lms
        ),
    )
}

fn gru_correctness() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let mc = ModelConfig {
            seq_len: 3,
            feat_dim: 2,
            hidden_size: 4,
            n_classes: 3,
            seed,
        };
        let mut net = GruNet::init(mc).unwrap();
        let mut r = rng::stream(seed, "acceptance/fd");
        for p in net.params_mut() {
            *p += 0.1 * r.random_range(-1.0..1.0);
        }
        let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..6).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let ys = [0, 1, 2, 1];
        let (_, g, _) = loss_and_grad(&net, &refs, &ys, f64::INFINITY).unwrap();
        let eps = 1e-5;
        for i in 0..g.len() {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + eps;
            let up = loss_and_grad(&net, &refs, &ys, f64::INFINITY).unwrap().0;
            net.params_mut()[i] = orig - eps;
            let down = loss_and_grad(&net, &refs, &ys, f64::INFINITY).unwrap().0;
            net.params_mut()[i] = orig;
            let fd = (up - down) / (2.0 * eps);
            worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6));
        }
    }

    let zero = GruNet::zeros(ModelConfig::for_features(40, 8, 3, 0)).unwrap();
    let x: Vec<f64> = (0..40).map(|i| (i as f64).sin() * 3.0).collect();
    let fwd = zero.forward(&zero.reshape(&x).unwrap()).unwrap();
    let hidden_zero = fwd.hidden.iter().flatten().all(|&h| h == 0.0);
    let (loss, _, _) = loss_and_grad(&zero, &[&x], &[1], 5.0).unwrap();
    let ln3 = 3f64.ln();

    let data = {
        let mut r = rng::stream(3, "acceptance/blobs");
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3 {
            for _ in 0..10 {
                rows.push((0..5).map(|j| if j % 3 == c { 2.0 } else { 0.0 } + r.random_range(-0.5..0.5)).collect());
                labels.push(c);
            }
        }
        eegscrub::features::FeatureMatrix::new(rows, (0..5).map(|j| format!("f{j}")).collect(), Some(labels)).unwrap()
    };
    let mc = ModelConfig::for_features(5, 6, 3, 11);
    let tc = TrainConfig {
        epochs: 5,
        batch_size: 8,
        seed: 11,
        ..TrainConfig::default()
    };
    let a = eegscrub::gru::train(&data, &mc, &tc).unwrap();
    let b = eegscrub::gru::train(&data, &mc, &tc).unwrap();
    let bits = |c: &eegscrub::gru::Classifier| -> Vec<u64> {
        c.net.as_network().params().iter().map(|v| v.to_bits()).collect()
    };
    let reproducible = bits(&a.classifier) == bits(&b.classifier);
    let el = t.elapsed();
    check(
        worst < 1e-4 && hidden_zero && (loss - ln3).abs() < 1e-12 && reproducible && within(el, 60.0),
        format!(
            "fd rel err {worst:.2e} (< 1e-4) over 5 seeds; zero model hidden all 0: {hidden_zero}, \
             loss {loss:.12} vs ln 3 {ln3:.12}; bit-identical retrain: {reproducible}; {el:.1?} (< 60 s)"
        ),
    )
}

fn dataset_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("EEGSCRUB_EMOTIONS_CSV") {
        return Some(PathBuf::from(p));
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/emotions.csv");
    p.exists().then_some(p)
}

fn classification() -> Outcome {
    let Some(path) = dataset_path() else {
        return Outcome {
            verdict: Verdict::Unavailable,
            detail: "public emotion feature table not found (set EEGSCRUB_EMOTIONS_CSV or add data/emotions.csv)"
                .into(),
        };
    };
    let t = Instant::now();
    let data = match load_feature_csv(&path, "label") {
        Ok(d) => d,
        Err(e) => return check(false, format!("cannot load {}: {e}", path.display())),
    };
    let seed = 42;
    let split = stratified_split(data.labels(), (0.70, 0.15, 0.15), seed).unwrap();
    let (train, val, test) = (
        data.features.select(&split.train),
        data.features.select(&split.val),
        data.features.select(&split.test),
    );
    let n_classes = data.class_names.len();
    let tc = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let mc = ModelConfig::for_features(data.features.n_features(), 64, n_classes, seed);
    let gru = train_on_split(&train, Some(&val), Net::Gru(GruNet::init(mc).unwrap()), n_classes, &tc)
        .and_then(|(c, _)| evaluate(&c, &test));
    let lin = LinearNet::zeros(data.features.n_features(), n_classes).and_then(|net| {
        train_on_split(&train, Some(&val), Net::Linear(net), n_classes, &tc).and_then(|(c, _)| evaluate(&c, &test))
    });
    let el = t.elapsed();
    match (gru, lin) {
        (Ok(g), Ok(l)) => check(
            g.accuracy >= 0.90 && l.accuracy >= 0.85 && within(el, 600.0),
            format!(
                "GRU test accuracy {:.4} (>= 0.90), linear {:.4} (>= 0.85) on {} test rows; {el:.1?} (< 600 s)",
                g.accuracy, l.accuracy, g.n
            ),
        ),
        (g, l) => check(false, format!("training failed: gru {:?}, linear {:?}", g.err(), l.err())),
    }
}

fn mix_consistency() -> Outcome {
    let cfg = BenchConfig {
        methods: vec![Method::Identity],
        noises: NoiseKind::ALL.iter().map(|&k| NoiseSpec::new(k, 0)).collect(),
        snrs_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 20.0],
        seeds: (0..5).collect(),
        duration_s: 8.0,
        ..BenchConfig::default()
    };
    let r = run_bench(&cfg).unwrap();
    let failed: usize = r.rows.iter().map(|row| row.n_failed).sum();
    check(
        r.max_mix_error_db < 1e-6,
        format!(
            "max |measured - target| SNR {:.2e} dB (< 1e-6) over {} mixes ({failed} unmixable draws skipped)",
            r.max_mix_error_db,
            r.cells.len()
        ),
    )
}

fn evaluation_arithmetic() -> Outcome {
    let names: Vec<String> = ["NEGATIVE", "NEUTRAL", "POSITIVE"].map(String::from).to_vec();
    let perfect = evaluate_predictions(&[0, 1, 2, 1], &[0, 1, 2, 1], &names).unwrap();
    let perfect_ok = perfect.accuracy == 1.0
        && perfect.f1 == [1.0, 1.0, 1.0]
        && perfect.confusion.counts == [vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]];
    let mixed = evaluate_predictions(&[0, 0, 1, 2], &[0, 1, 1, 2], &names).unwrap();
    let mixed_ok = mixed.accuracy == 0.75 && mixed.precision[1] == 0.5 && mixed.recall[1] == 1.0;
    let constant = evaluate_predictions(&[0, 0, 1, 1, 2, 2], &[0; 6], &names).unwrap();
    let constant_ok = constant.accuracy == 1.0 / 3.0
        && constant.recall[0] == 1.0
        && constant.precision[1] == 0.0
        && constant.precision_undefined[1];
    check(
        perfect_ok && mixed_ok && constant_ok,
        format!("perfect case {perfect_ok}, (0,0,1,2)/(0,1,1,2) case {mixed_ok}, constant-prediction case {constant_ok}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("reconstruction identities", reconstruction),
        ("notch performance", notch),
        ("denoising efficacy", denoising),
        ("GRU correctness", gru_correctness),
        ("classification reproduction", classification),
        ("metrics self-consistency", mix_consistency),
        ("evaluation arithmetic", evaluation_arithmetic),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Unavailable => "FAIL (data unavailable)",
        };
        println!("criterion {}: {tag}: {name}: {}", i + 1, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
