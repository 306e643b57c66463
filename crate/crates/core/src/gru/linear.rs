//! Softmax regression over the flat feature vector.

use serde::{Deserialize, Serialize};

use super::network::softmax;
use super::Network;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearNet {
    pub n_features: usize,
    pub n_classes: usize,
    /// `C x n` weights followed by `C` biases.
    theta: Vec<f64>,
}

impl LinearNet {
    /// All-zero weights and biases.
    pub fn zeros(n_features: usize, n_classes: usize) -> Result<Self> {
        if n_classes < 2 || n_features == 0 {
            return Err(Error::invalid("need at least 1 feature and 2 classes"));
        }
        Ok(Self {
            n_features,
            n_classes,
            theta: vec![0.0; (n_features + 1) * n_classes],
        })
    }

    pub fn from_params(n_features: usize, n_classes: usize, theta: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(n_features, n_classes)?;
        if theta.len() != net.theta.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                net.theta.len(),
                theta.len()
            )));
        }
        net.theta = theta;
        Ok(net)
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::ShapeMismatch(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let n = self.n_features;
        let b = &self.theta[n * self.n_classes..];
        Ok((0..self.n_classes)
            .map(|c| b[c] + self.theta[c * n..(c + 1) * n].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect())
    }
}

impl Network for LinearNet {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn input_len(&self) -> usize {
        self.n_features
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    fn loss_and_grad_raw(&self, xs: &[&[f64]], ys: &[usize]) -> Result<(f64, Vec<f64>)> {
        let n = self.n_features;
        let mut g = vec![0.0; self.theta.len()];
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let mut p = self.proba(x)?;
            loss -= p[y].max(f64::MIN_POSITIVE).ln();
            p[y] -= 1.0;
            for (c, d) in p.iter().enumerate() {
                let d = d * scale;
                for (gw, v) in g[c * n..(c + 1) * n].iter_mut().zip(x.iter()) {
                    *gw += d * v;
                }
                g[n * self.n_classes + c] += d;
            }
        }
        Ok((loss * scale, g))
    }
}
