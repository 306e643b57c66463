//! Mini-batch Adam training with per-epoch history.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::linear::LinearNet;
use super::network::{GruNet, ModelConfig};
use super::optim::Adam;
use super::split::stratified_split;
use super::{loss_and_grad, Network};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::normalize::{NormMode, NormStats};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub grad_clip: f64,
    /// Fraction of the training data held out for validation.
    pub val_fraction: f64,
    pub norm: NormMode,
    #[serde(with = "crate::report::seed_string")]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            grad_clip: 5.0,
            val_fraction: 0.15,
            norm: NormMode::Zscore,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch_size must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be nonnegative, got {}", self.learning_rate)));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0 && self.eps > 0.0) {
            return Err(Error::invalid("Adam betas must lie in (0, 1) and eps must be positive"));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::invalid("grad_clip must be positive"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction <= 0.5) {
            return Err(Error::invalid(format!("validation fraction must lie in (0, 0.5], got {}", self.val_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Net {
    Gru(GruNet),
    Linear(LinearNet),
}

impl Net {
    pub fn as_network(&self) -> &dyn Network {
        match self {
            Net::Gru(n) => n,
            Net::Linear(n) => n,
        }
    }

    fn as_network_mut(&mut self) -> &mut dyn Network {
        match self {
            Net::Gru(n) => n,
            Net::Linear(n) => n,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Net::Gru(_) => "gru",
            Net::Linear(_) => "linear",
        }
    }
}

/// A trained network with the normalization fitted on its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub net: Net,
    pub norm: NormStats,
    pub class_names: Vec<String>,
}

impl Classifier {
    pub fn n_features(&self) -> usize {
        self.norm.dim()
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, got {}",
                self.n_features(),
                row.len()
            )));
        }
        self.net.as_network().proba(&self.norm.apply_row(row))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| Ok(argmax(&self.predict_proba(r)?))).collect()
    }
}

fn argmax(p: &[f64]) -> usize {
    (0..p.len()).fold(0, |best, i| if p[i] > p[best] { i } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    /// NaN when no validation set was used.
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub classifier: Classifier,
    pub history: Vec<EpochRecord>,
    /// Indices into the input dataset used for fitting and for validation.
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
}

fn default_class_names(c: usize) -> Vec<String> {
    (0..c).map(|i| i.to_string()).collect()
}

/// Trains the GRU, holding out a stratified `val_fraction` for validation.
pub fn train(dataset: &FeatureMatrix, mc: &ModelConfig, tc: &TrainConfig) -> Result<TrainOutcome> {
    mc.validate()?;
    if dataset.n_features() > mc.input_len() {
        return Err(Error::ShapeMismatch(format!(
            "{} features exceed the {}x{} input sequence",
            dataset.n_features(),
            mc.seq_len,
            mc.feat_dim
        )));
    }
    fit_with_split(dataset, Net::Gru(GruNet::init(*mc)?), mc.n_classes, tc)
}

/// Softmax regression trained the same way as [`train`], zero-initialized.
pub fn train_linear_baseline(dataset: &FeatureMatrix, n_classes: usize, tc: &TrainConfig) -> Result<TrainOutcome> {
    let net = LinearNet::zeros(dataset.n_features(), n_classes)?;
    fit_with_split(dataset, Net::Linear(net), n_classes, tc)
}

fn fit_with_split(dataset: &FeatureMatrix, net: Net, n_classes: usize, tc: &TrainConfig) -> Result<TrainOutcome> {
    tc.validate()?;
    let labels = dataset
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("training needs a labeled feature matrix"))?;
    if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::LabelOutOfRange { label, n_classes });
    }
    if labels.len() < 5 * n_classes {
        return Err(Error::invalid(format!(
            "need at least {} samples for {n_classes} classes, got {}",
            5 * n_classes,
            labels.len()
        )));
    }
    let split = stratified_split(labels, (1.0 - tc.val_fraction, tc.val_fraction, 0.0), tc.seed)?;
    let train_set = dataset.select(&split.train);
    let val_set = dataset.select(&split.val);
    let (classifier, history) = train_on_split(&train_set, Some(&val_set), net, n_classes, tc)?;
    Ok(TrainOutcome {
        classifier,
        history,
        train_idx: split.train,
        val_idx: split.val,
    })
}

/// Trains `net` on `train` as given, scoring `val` after every epoch.
pub fn train_on_split(
    train: &FeatureMatrix,
    val: Option<&FeatureMatrix>,
    mut net: Net,
    n_classes: usize,
    tc: &TrainConfig,
) -> Result<(Classifier, Vec<EpochRecord>)> {
    let y = train
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("training needs a labeled feature matrix"))?;
    if let Some(missing) = (0..n_classes).find(|c| !y.contains(c)) {
        return Err(Error::Stratification(format!("class {missing} is absent from the training split")));
    }
    let norm = NormStats::fit(&train.rows, tc.norm)?;
    let x = norm.apply(&train.rows)?;
    let val_data = match val {
        Some(v) if v.n_rows() > 0 => Some((
            norm.apply(&v.rows)?,
            v.labels.clone().ok_or_else(|| Error::invalid("validation set is unlabeled"))?,
        )),
        _ => None,
    };

    let n_params = net.as_network().params().len();
    let mut adam = Adam::new(n_params, tc.learning_rate, tc.beta1, tc.beta2, tc.eps);
    let mut history = Vec::with_capacity(tc.epochs);
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 0..tc.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::substream(tc.seed, "shuffle", epoch as u64));
        for batch in order.chunks(tc.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| x[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (_, g, _) = loss_and_grad(net.as_network(), &xs, &ys, tc.grad_clip)?;
            adam.step(net.as_network_mut().params_mut(), &g);
        }
        if net.as_network().params().iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericDegeneracy(format!("parameters became non-finite in epoch {}", epoch + 1)));
        }
        let (train_loss, train_acc) = score(net.as_network(), &x, y)?;
        let (val_loss, val_acc) = match &val_data {
            Some((vx, vy)) => score(net.as_network(), vx, vy)?,
            None => (f64::NAN, f64::NAN),
        };
        history.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        });
    }
    let classifier = Classifier {
        net,
        norm,
        class_names: default_class_names(n_classes),
    };
    Ok((classifier, history))
}

/// Mean cross-entropy and accuracy on already-normalized rows.
fn score(net: &dyn Network, x: &[Vec<f64>], y: &[usize]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut hits = 0usize;
    for (row, &label) in x.iter().zip(y) {
        let p = net.proba(row)?;
        loss -= p[label].max(f64::MIN_POSITIVE).ln();
        if argmax(&p) == label {
            hits += 1;
        }
    }
    let n = x.len().max(1) as f64;
    Ok((loss / n, hits as f64 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Three well-separated Gaussian blobs, `per_class` rows each.
    fn blobs(per_class: usize, dim: usize, seed: u64) -> FeatureMatrix {
        let mut r = rng::stream(seed, "blobs");
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3 {
            for _ in 0..per_class {
                rows.push(
                    (0..dim)
                        .map(|j| {
                            let centre = if j % 3 == c { 4.0 } else { 0.0 };
                            let z: f64 = StandardNormal.sample(&mut r);
                            centre + 0.5 * z
                        })
                        .collect(),
                );
                labels.push(c);
            }
        }
        let names = (0..dim).map(|j| format!("f{j}")).collect();
        FeatureMatrix::new(rows, names, Some(labels)).unwrap()
    }

    fn small_gru(n_features: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            seq_len: 1,
            feat_dim: n_features,
            hidden_size: 8,
            n_classes: 3,
            seed,
        }
    }

    #[test]
    fn gru_separates_blobs() {
        let data = blobs(40, 3, 1);
        let tc = TrainConfig {
            epochs: 200,
            batch_size: 16,
            learning_rate: 1e-2,
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train(&data, &small_gru(3, 3), &tc).unwrap();
        let last = out.history.last().unwrap();
        assert!(last.train_acc >= 0.99, "{last:?}");
        assert_eq!(out.history.len(), 200);
    }

    #[test]
    fn linear_separates_blobs() {
        let data = blobs(40, 6, 2);
        let tc = TrainConfig {
            epochs: 100,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let out = train_linear_baseline(&data, 3, &tc).unwrap();
        assert!(out.history.last().unwrap().train_acc >= 0.99);
        let again = train_linear_baseline(&data, 3, &tc).unwrap();
        assert_eq!(out.classifier, again.classifier);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let data = blobs(10, 3, 4);
        let tc = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let mc = small_gru(3, 9);
        let out = train(&data, &mc, &tc).unwrap();
        assert_eq!(out.classifier.net, Net::Gru(GruNet::init(mc).unwrap()));
        let first = out.history[0];
        assert!(out.history.iter().all(|h| h.train_loss == first.train_loss && h.val_acc == first.val_acc));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let data = blobs(15, 5, 5);
        let mc = ModelConfig::for_features(5, 6, 3, 11);
        let tc = TrainConfig {
            epochs: 3,
            batch_size: 8,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train(&data, &mc, &tc).unwrap();
        let b = train(&data, &mc, &tc).unwrap();
        assert_eq!(a.classifier, b.classifier);
        let c = train(&data, &mc, &TrainConfig { seed: 12, ..tc }).unwrap();
        assert_ne!(a.classifier, c.classifier);
    }

    #[test]
    fn preconditions() {
        let data = blobs(3, 3, 6);
        assert!(train(&data, &small_gru(3, 0), &TrainConfig::default()).is_err());
        let mut two = blobs(10, 3, 7);
        two.labels = Some(two.labels.unwrap().iter().map(|&l| l.min(1)).collect());
        assert!(matches!(
            train(&two, &small_gru(3, 0), &TrainConfig::default()),
            Err(Error::Stratification(_))
        ));
        let bad = TrainConfig {
            val_fraction: 0.7,
            ..TrainConfig::default()
        };
        assert!(train(&blobs(10, 3, 8), &small_gru(3, 0), &bad).is_err());
    }
}
