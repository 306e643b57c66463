//! `eegscrub` command-line front end.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 on a data error. Every
//! run produces a TOML report holding the resolved configuration; it goes
//! to `--report` when given and to standard output otherwise.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;

use eegscrub::artifact::{denoise_recording, Method, MethodParams};
use eegscrub::bench::{run_bench, BenchConfig};
use eegscrub::dataset::{
    load_feature_csv, load_raw_csv, load_unlabeled_csv, parse_label, write_raw_csv, EMOTION_CLASSES,
};
use eegscrub::features::{build_feature_matrix, EpochConfig};
use eegscrub::gru::{
    evaluate, load_model, save_model, stratified_split, train, train_linear_baseline, train_on_split,
    write_history_csv, GruNet, LinearNet, ModelConfig, Net, TrainConfig,
};
use eegscrub::noise::{clean_surrogate, gen_noise, metrics_of, mix_at_snr, NoiseSpec};
use eegscrub::normalize::NormMode;
use eegscrub::report::{write_report, RunReport};
use eegscrub::{rng, Recording};

#[derive(Parser, Serialize)]
#[command(name = "eegscrub", version, about = "EEG artifact removal and emotion classification")]
struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, env = "EEGSCRUB_SEED", default_value_t = 0)]
    #[serde(with = "eegscrub::report::seed_string")]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate a clean surrogate recording and contaminate it.
    Simulate(SimulateArgs),
    /// Remove artifacts from a raw recording.
    Denoise(DenoiseArgs),
    /// Run the seeded denoising benchmark grid.
    Bench(BenchArgs),
    /// Turn a raw recording into a per-epoch feature table.
    ExtractFeatures(ExtractArgs),
    /// Train the GRU classifier or the linear baseline.
    Train(TrainArgs),
    /// Score a trained model on a labeled feature table.
    Eval(EvalArgs),
    /// Predict classes for a feature table.
    Predict(PredictArgs),
}

#[derive(Args, Serialize)]
struct ReportArg {
    /// Where to write the run report (TOML). Defaults to standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Contaminated recording (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Also write the clean surrogate here.
    #[arg(long)]
    clean_out: Option<PathBuf>,
    /// Contaminant in `kind=...,key=value` form; repeat to add several.
    #[arg(long = "noise")]
    noises: Vec<String>,
    /// SNR of each contaminant relative to the clean signal, in dB.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 8.0)]
    duration: f64,
    #[arg(long, default_value_t = 256.0)]
    fs: f64,
    #[arg(long, default_value_t = 4)]
    channels: usize,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args, Serialize)]
struct DenoiseArgs {
    /// Raw recording (CSV, one column per channel).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "dwt")]
    method: String,
    /// Sampling rate of the input.
    #[arg(long, default_value_t = 256.0)]
    fs: f64,
    /// Method parameter override, `name=value`; repeatable.
    #[arg(long = "set")]
    sets: Vec<String>,
    /// Clean reference recording; adds per-channel metrics to the report.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    /// Comma-separated method ids.
    #[arg(long, value_delimiter = ',', default_value = "identity,dwt")]
    methods: Vec<String>,
    /// Contaminant in `kind=...,key=value` form; repeatable.
    #[arg(long = "noise", default_value = "kind=awgn")]
    noises: Vec<String>,
    /// Comma-separated SNR levels in dB.
    #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
    snrs: Vec<f64>,
    /// Number of seeds; seed i of the grid is `--seed + i`.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 4.0)]
    duration: f64,
    #[arg(long, default_value_t = 256.0)]
    fs: f64,
    #[arg(long, default_value_t = 4)]
    channels: usize,
    /// Mix one contaminant realization into every channel.
    #[arg(long)]
    shared_noise: bool,
    #[arg(long = "set")]
    sets: Vec<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Leaderboard CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args, Serialize)]
struct ExtractArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 256.0)]
    fs: f64,
    /// Class label attached to every epoch (NEGATIVE, NEUTRAL or POSITIVE).
    #[arg(long)]
    label: Option<String>,
    /// Denoise with this method before extracting.
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "set")]
    sets: Vec<String>,
    #[arg(long, default_value_t = 2.0)]
    window: f64,
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    #[arg(long, default_value_t = 256)]
    seg_len: usize,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Labeled feature table (CSV).
    #[arg(long)]
    features: PathBuf,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
    /// Per-epoch history CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// `gru` or `linear`.
    #[arg(long, default_value = "gru")]
    kind: String,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 5.0)]
    grad_clip: f64,
    #[arg(long, default_value_t = 0.15)]
    val_fraction: f64,
    /// Hold out this stratified fraction as a test set and evaluate on it.
    #[arg(long, default_value_t = 0.0)]
    test_fraction: f64,
    /// `zscore` or `minmax`.
    #[arg(long, default_value = "zscore")]
    norm: String,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Predictions CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
}

enum Failure {
    Usage(String),
    Data(eegscrub::Error),
}

impl From<eegscrub::Error> for Failure {
    fn from(e: eegscrub::Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> CliResult<T> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let mut report = RunReport::new(command_name(&cli.command));
    report.set_config("seed", &cli.seed.to_string())?;
    report.set_config("command", &cli.command)?;
    let dest = match &cli.command {
        Command::Simulate(a) => {
            simulate(a, cli.seed, &mut report)?;
            &a.report.report
        }
        Command::Denoise(a) => {
            denoise(a, &mut report)?;
            &a.report.report
        }
        Command::Bench(a) => {
            bench(a, cli.seed, &mut report)?;
            &a.report.report
        }
        Command::ExtractFeatures(a) => {
            extract(a, &mut report)?;
            &a.report.report
        }
        Command::Train(a) => {
            train_cmd(a, cli.seed, &mut report)?;
            &a.report.report
        }
        Command::Eval(a) => {
            eval_cmd(a, &mut report)?;
            &a.report.report
        }
        Command::Predict(a) => return predict(a),
    };
    match dest {
        Some(path) => write_report(&report, path)?,
        None => print!("{}", report.to_toml()?),
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Denoise(_) => "denoise",
        Command::Bench(_) => "bench",
        Command::ExtractFeatures(_) => "extract-features",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::Predict(_) => "predict",
    }
}

fn parse_method(s: &str) -> CliResult<Method> {
    usage(s.parse::<Method>())
}

/// Applies `name=value` overrides (`kalman.q=...` for nested fields).
fn method_params(sets: &[String]) -> CliResult<MethodParams> {
    let toml::Value::Table(mut table) = usage(toml::Value::try_from(MethodParams::default()))? else {
        unreachable!("method parameters serialize to a table");
    };
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects name=value, got '{set}'")))?;
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let mut slot = &mut table;
        let mut parts: Vec<&str> = key.trim().split('.').collect();
        let leaf = parts.pop().unwrap_or_default();
        for p in parts {
            slot = match slot.get_mut(p) {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(Failure::Usage(format!("unknown method parameter '{key}'"))),
            };
        }
        if !slot.contains_key(leaf) && !matches!(leaf, "ssa_window") {
            return Err(Failure::Usage(format!("unknown method parameter '{key}'")));
        }
        slot.insert(leaf.to_string(), value);
    }
    usage(toml::Value::Table(table).try_into::<MethodParams>())
}

fn noise_spec(text: &str) -> CliResult<(NoiseSpec, bool)> {
    let spec = usage(text.parse::<NoiseSpec>())?;
    Ok((spec, text.contains("seed=")))
}

fn simulate(a: &SimulateArgs, seed: u64, report: &mut RunReport) -> CliResult<()> {
    if a.channels == 0 || !(a.duration > 0.0) || !(a.fs > 0.0) {
        return Err(Failure::Usage("channels, duration and fs must be positive".into()));
    }
    let n = (a.duration * a.fs).round() as usize;
    let clean = clean_surrogate(a.channels, n, a.fs, seed)?;
    let specs = a.noises.iter().map(|t| noise_spec(t)).collect::<CliResult<Vec<_>>>()?;
    let mut mixes = Vec::new();
    let mut channels = Vec::with_capacity(a.channels);
    for (c, s) in clean.channels().iter().enumerate() {
        let mut acc = s.samples().to_vec();
        for (k, (spec, explicit)) in specs.iter().enumerate() {
            let base = if *explicit { spec.seed } else { seed };
            let mut spec = spec.resolved();
            spec.seed = rng::substream(base, &format!("simulate/{k}"), c as u64).random();
            let noise = gen_noise(&spec, n, a.fs)?;
            let (mixed, mut mr) = mix_at_snr(s, &noise, a.snr_db)?;
            for ((o, m), x) in acc.iter_mut().zip(mixed.samples()).zip(s.samples()) {
                *o += m - x;
            }
            mr.spec = Some(spec);
            mixes.push(mr);
        }
        channels.push(acc);
    }
    let noisy = Recording::from_samples(channels, clean.channel_names().to_vec(), a.fs)?;
    write_raw_csv(&noisy, &a.out)?;
    if let Some(p) = &a.clean_out {
        write_raw_csv(&clean, p)?;
    }
    report.add_section("mixes", &mixes)?;
    report.add_section("samples", &n)?;
    Ok(())
}

fn load_raw(path: &Path, fs: f64, report: &mut RunReport) -> CliResult<Recording> {
    if !(fs > 0.0) {
        return Err(Failure::Usage("--fs must be positive".into()));
    }
    let load = load_raw_csv(path, fs)?;
    if load.rejected_rows > 0 {
        eprintln!("{}: rejected {} rows with non-finite values", path.display(), load.rejected_rows);
    }
    report.add_section("rejected_rows", &load.rejected_rows)?;
    Ok(load.recording)
}

fn denoise(a: &DenoiseArgs, report: &mut RunReport) -> CliResult<()> {
    let method = parse_method(&a.method)?;
    let params = method_params(&a.sets)?;
    report.set_config("method_params", &params)?;
    let rec = load_raw(&a.input, a.fs, report)?;
    let (out, dr) = denoise_recording(&rec, method, &params)?;
    write_raw_csv(&out, &a.out)?;
    report.add_section("denoise", &dr)?;
    if let Some(r) = &a.reference {
        let clean = load_raw_csv(r, a.fs)?.recording;
        let mut metrics = BTreeMap::new();
        for (name, s) in out.channel_names().iter().zip(out.channels()) {
            let c = clean.channel(name).ok_or_else(|| eegscrub::Error::UnknownChannel(name.clone()))?;
            let noisy = rec.channel(name).expect("denoising keeps the channel layout");
            let before = metrics_of(c.samples(), noisy.samples())?;
            let after = metrics_of(c.samples(), s.samples())?;
            metrics.insert(name.clone(), BTreeMap::from([("before", before), ("after", after)]));
        }
        report.add_section("metrics", &metrics)?;
    }
    Ok(())
}

fn bench(a: &BenchArgs, seed: u64, report: &mut RunReport) -> CliResult<()> {
    let cfg = BenchConfig {
        methods: a.methods.iter().map(|m| parse_method(m)).collect::<CliResult<_>>()?,
        noises: a.noises.iter().map(|t| noise_spec(t).map(|s| s.0.resolved())).collect::<CliResult<_>>()?,
        snrs_db: a.snrs.clone(),
        seeds: (0..a.seeds).map(|i| seed.wrapping_add(i)).collect(),
        n_channels: a.channels,
        duration_s: a.duration,
        fs: a.fs,
        shared_noise: a.shared_noise,
        params: method_params(&a.sets)?,
        threads: a.threads,
    };
    usage(cfg.validate())?;
    report.set_config("bench", &cfg)?;
    let result = run_bench(&cfg)?;
    eprint!("{}", result.tables());
    if let Some(p) = &a.out {
        result.write_leaderboard_csv(p)?;
    }
    report.add_section("rows", &result.rows)?;
    report.add_section("max_mix_error_db", &result.max_mix_error_db)?;
    Ok(())
}

fn extract(a: &ExtractArgs, report: &mut RunReport) -> CliResult<()> {
    let label = match &a.label {
        Some(t) => Some(parse_label(t).ok_or_else(|| Failure::Usage(format!("unknown label '{t}'")))?),
        None => None,
    };
    let cfg = EpochConfig {
        window_s: a.window,
        overlap: a.overlap,
        seg_len: a.seg_len,
        ..EpochConfig::default()
    };
    report.set_config("epochs", &cfg)?;
    let mut rec = load_raw(&a.input, a.fs, report)?;
    if let Some(m) = &a.method {
        let params = method_params(&a.sets)?;
        report.set_config("method_params", &params)?;
        let (out, dr) = denoise_recording(&rec, parse_method(m)?, &params)?;
        report.add_section("denoise", &dr)?;
        rec = out;
    }
    let fm = build_feature_matrix(&rec, &cfg, label)?;
    fm.write_csv(&a.out, &EMOTION_CLASSES.map(String::from))?;
    report.add_section("rows", &fm.n_rows())?;
    report.add_section("features", &fm.n_features())?;
    Ok(())
}

fn train_cmd(a: &TrainArgs, seed: u64, report: &mut RunReport) -> CliResult<()> {
    let norm: NormMode = usage(a.norm.parse())?;
    let tc = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        grad_clip: a.grad_clip,
        val_fraction: a.val_fraction,
        norm,
        seed,
        ..TrainConfig::default()
    };
    usage(tc.validate())?;
    if !(0.0..0.5).contains(&a.test_fraction) {
        return Err(Failure::Usage("--test-fraction must lie in [0, 0.5)".into()));
    }
    let data = load_feature_csv(&a.features, &a.label_column)?;
    let n_classes = data.class_names.len();
    let n_features = data.features.n_features();
    let mc = ModelConfig::for_features(n_features, a.hidden, n_classes, seed);
    let net = match a.kind.as_str() {
        "gru" => {
            usage(mc.validate())?;
            report.set_config("model", &mc)?;
            Net::Gru(GruNet::init(mc)?)
        }
        "linear" => Net::Linear(LinearNet::zeros(n_features, n_classes)?),
        other => return Err(Failure::Usage(format!("unknown model kind '{other}'"))),
    };
    report.set_config("train", &tc)?;

    let (mut classifier, history, test_idx) = if a.test_fraction > 0.0 {
        let fr = (1.0 - a.val_fraction - a.test_fraction, a.val_fraction, a.test_fraction);
        let split = stratified_split(data.labels(), fr, seed)?;
        let (c, h) = train_on_split(
            &data.features.select(&split.train),
            Some(&data.features.select(&split.val)),
            net,
            n_classes,
            &tc,
        )?;
        (c, h, split.test)
    } else {
        let out = match net {
            Net::Gru(_) => train(&data.features, &mc, &tc)?,
            Net::Linear(_) => train_linear_baseline(&data.features, n_classes, &tc)?,
        };
        (out.classifier, out.history, Vec::new())
    };
    classifier.class_names = data.class_names.clone();
    save_model(&classifier, &a.model)?;
    if let Some(p) = &a.history {
        write_history_csv(&history, p)?;
    }
    if let Some(last) = history.last() {
        report.add_section("final_epoch", last)?;
        eprintln!(
            "epoch {}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}",
            last.epoch, last.train_loss, last.train_acc, last.val_loss, last.val_acc
        );
    }
    if !test_idx.is_empty() {
        let ev = evaluate(&classifier, &data.features.select(&test_idx))?;
        eprintln!("test accuracy {:.4} on {} rows", ev.accuracy, ev.n);
        report.add_section("test_evaluation", &ev)?;
    }
    Ok(())
}

fn eval_cmd(a: &EvalArgs, report: &mut RunReport) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let data = load_feature_csv(&a.features, &a.label_column)?;
    let ev = evaluate(&model, &data.features)?;
    eprintln!("accuracy {:.4} on {} rows, macro F1 {:.4}", ev.accuracy, ev.n, ev.macro_f1());
    for (name, row) in ev.confusion.class_names.iter().zip(&ev.confusion.counts) {
        eprintln!("  {name:<10} {row:?}");
    }
    report.add_section("evaluation", &ev)?;
    Ok(())
}

fn predict(a: &PredictArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let data = load_unlabeled_csv(&a.features, &a.label_column)?;
    let mut header = vec!["row".to_string(), "predicted".to_string()];
    header.extend(model.class_names.iter().map(|c| format!("p_{c}")));
    let mut lines = vec![header.join(",")];
    for (i, row) in data.rows.iter().enumerate() {
        let p = model.predict_proba(row)?;
        let best = (0..p.len()).fold(0, |b, k| if p[k] > p[b] { k } else { b });
        let mut fields = vec![(i + 1).to_string(), model.class_names[best].clone()];
        fields.extend(p.iter().map(|v| format!("{v:?}")));
        lines.push(fields.join(","));
    }
    let text = lines.join("\n") + "\n";
    match &a.out {
        Some(p) => std::fs::write(p, text).map_err(|e| eegscrub::Error::Io {
            path: p.clone(),
            source: e,
        })?,
        None => print!("{text}"),
    }
    Ok(())
}
