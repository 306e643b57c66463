//! Confusion matrix and per-class precision, recall and F1.

use serde::{Deserialize, Serialize};

use super::train::Classifier;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }
}

/// Metrics with a zero denominator are reported as 0 and flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub precision_undefined: Vec<bool>,
    pub recall_undefined: Vec<bool>,
    pub f1_undefined: Vec<bool>,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    pub fn macro_f1(&self) -> f64 {
        self.f1.iter().sum::<f64>() / self.f1.len() as f64
    }
}

pub fn evaluate_predictions(truth: &[usize], pred: &[usize], class_names: &[String]) -> Result<Evaluation> {
    if truth.is_empty() || truth.len() != pred.len() {
        return Err(Error::invalid(format!(
            "need matching nonempty label lists ({} true, {} predicted)",
            truth.len(),
            pred.len()
        )));
    }
    let c = class_names.len();
    if let Some(&label) = truth.iter().chain(pred).find(|&&l| l >= c) {
        return Err(Error::LabelOutOfRange { label, n_classes: c });
    }
    let mut counts = vec![vec![0u64; c]; c];
    for (&t, &p) in truth.iter().zip(pred) {
        counts[t][p] += 1;
    }
    let ratio = |num: u64, den: u64| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
    let mut out = Evaluation {
        n: truth.len(),
        accuracy: 0.0,
        precision: vec![0.0; c],
        recall: vec![0.0; c],
        f1: vec![0.0; c],
        precision_undefined: vec![false; c],
        recall_undefined: vec![false; c],
        f1_undefined: vec![false; c],
        confusion: ConfusionMatrix {
            counts,
            class_names: class_names.to_vec(),
        },
    };
    let m = &out.confusion.counts;
    for k in 0..c {
        let col: u64 = (0..c).map(|i| m[i][k]).sum();
        let row: u64 = m[k].iter().sum();
        (out.precision[k], out.precision_undefined[k]) = ratio(m[k][k], col);
        (out.recall[k], out.recall_undefined[k]) = ratio(m[k][k], row);
        let (p, r) = (out.precision[k], out.recall[k]);
        if p + r > 0.0 {
            out.f1[k] = 2.0 * p * r / (p + r);
        } else {
            out.f1_undefined[k] = true;
        }
    }
    out.accuracy = out.confusion.trace() as f64 / out.n as f64;
    Ok(out)
}

/// Predicts every row of a labeled matrix and scores the predictions.
pub fn evaluate(model: &Classifier, test: &FeatureMatrix) -> Result<Evaluation> {
    let truth = test
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("evaluation needs a labeled feature matrix"))?;
    let pred = model.predict(&test.rows)?;
    evaluate_predictions(truth, &pred, &model.class_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(c: usize) -> Vec<String> {
        (0..c).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn perfect() {
        let y = [0, 1, 2, 2, 1];
        let e = evaluate_predictions(&y, &y, &names(3)).unwrap();
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.f1, vec![1.0; 3]);
        assert_eq!(e.confusion.counts, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
    }

    #[test]
    fn hand_counted() {
        let e = evaluate_predictions(&[0, 0, 1, 2], &[0, 1, 1, 2], &names(3)).unwrap();
        assert_eq!(e.accuracy, 0.75);
        assert_eq!(e.precision[1], 0.5);
        assert_eq!(e.recall[1], 1.0);
        assert_eq!(e.recall[0], 0.5);
        assert_eq!(e.precision[0], 1.0);
        assert_eq!(e.f1[1], 2.0 / 3.0);
        assert_eq!(e.confusion.total(), 4);
    }

    #[test]
    fn all_zero_predictions() {
        let truth = [0, 0, 1, 1, 2, 2];
        let e = evaluate_predictions(&truth, &[0; 6], &names(3)).unwrap();
        assert_eq!(e.accuracy, 1.0 / 3.0);
        assert_eq!(e.recall[0], 1.0);
        assert_eq!(e.precision[0], 1.0 / 3.0);
        assert_eq!((e.precision[1], e.precision_undefined[1]), (0.0, true));
        assert_eq!((e.f1[2], e.f1_undefined[2]), (0.0, true));
        assert!(!e.precision_undefined[0]);
    }

    #[test]
    fn relabeling_permutes_matrix() {
        let truth = [0, 1, 2, 2, 1, 0, 1];
        let pred = [0, 2, 2, 1, 1, 0, 0];
        let perm = [2, 0, 1];
        let e = evaluate_predictions(&truth, &pred, &names(3)).unwrap();
        let pt: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
        let pp: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        let f = evaluate_predictions(&pt, &pp, &names(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(e.confusion.counts[i][j], f.confusion.counts[perm[i]][perm[j]]);
            }
            assert_eq!(e.f1[i], f.f1[perm[i]]);
        }
        assert_eq!(e.accuracy, f.accuracy);
    }
}
