//! GRU layer followed by flatten, dense and softmax, with exact BPTT.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};
use crate::rng;

/// Sequence length used when reshaping flat feature vectors.
pub const DEFAULT_SEQ_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub seq_len: usize,
    pub feat_dim: usize,
    pub hidden_size: usize,
    pub n_classes: usize,
    #[serde(with = "crate::report::seed_string")]
    pub seed: u64,
}

impl ModelConfig {
    /// `T = 16` steps of `F = ceil(n_features / 16)` inputs, zero-padded.
    pub fn for_features(n_features: usize, hidden_size: usize, n_classes: usize, seed: u64) -> Self {
        Self {
            seq_len: DEFAULT_SEQ_LEN,
            feat_dim: n_features.div_ceil(DEFAULT_SEQ_LEN).max(1),
            hidden_size,
            n_classes,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 || self.feat_dim == 0 || self.hidden_size == 0 {
            return Err(Error::invalid("seq_len, feat_dim and hidden_size must be positive"));
        }
        if self.n_classes < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {}", self.n_classes)));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.seq_len * self.feat_dim
    }
}

/// Named parameter blocks in storage order: `(name, rows, cols)`.
pub fn layout(c: &ModelConfig) -> Vec<(&'static str, usize, usize)> {
    let (f, h, k) = (c.feat_dim, c.hidden_size, c.n_classes);
    vec![
        ("W_z", h, f),
        ("U_z", h, h),
        ("b_z", h, 1),
        ("W_r", h, f),
        ("U_r", h, h),
        ("b_r", h, 1),
        ("W_h", h, f),
        ("U_h", h, h),
        ("b_h", h, 1),
        ("W_dense", k, c.seq_len * h),
        ("b_dense", k, 1),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruNet {
    pub config: ModelConfig,
    theta: Vec<f64>,
    offsets: [usize; 12],
}

/// Per-step activations kept for backpropagation.
#[derive(Debug, Clone)]
struct Step {
    z: Vec<f64>,
    r: Vec<f64>,
    cand: Vec<f64>,
    h_prev: Vec<f64>,
    rh: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruForward {
    /// T x H hidden states.
    pub hidden: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl GruNet {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut offsets = [0; 12];
        for (i, (_, r, c)) in layout(&config).iter().enumerate() {
            offsets[i + 1] = offsets[i] + r * c;
        }
        Ok(Self {
            config,
            theta: vec![0.0; offsets[11]],
            offsets,
        })
    }

    /// Glorot-uniform weights, zero biases, drawn from the config seed.
    pub fn init(config: ModelConfig) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = rng::stream(config.seed, "gru_init");
        for (i, (name, rows, cols)) in layout(&config).into_iter().enumerate() {
            if name.starts_with('b') {
                continue;
            }
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            for v in &mut net.theta[net.offsets[i]..net.offsets[i + 1]] {
                *v = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn from_params(config: ModelConfig, theta: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(config)?;
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

    pub fn block(&self, i: usize) -> &[f64] {
        &self.theta[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Splits a flat feature vector into `T` steps of `F` values, zero-padded.
    pub fn reshape(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (t, f) = (self.config.seq_len, self.config.feat_dim);
        if x.len() > t * f {
            return Err(Error::ShapeMismatch(format!(
                "{} features do not fit a {t}x{f} sequence",
                x.len()
            )));
        }
        Ok((0..t)
            .map(|s| (0..f).map(|j| x.get(s * f + j).copied().unwrap_or(0.0)).collect())
            .collect())
    }

    pub fn forward(&self, seq: &[Vec<f64>]) -> Result<GruForward> {
        let (hidden, _, probs) = self.run(seq)?;
        Ok(GruForward { hidden, probs })
    }

    fn check(&self, seq: &[Vec<f64>]) -> Result<()> {
        let (t, f) = (self.config.seq_len, self.config.feat_dim);
        if seq.len() != t || seq.iter().any(|s| s.len() != f) {
            return Err(Error::ShapeMismatch(format!("expected a {t}x{f} input sequence")));
        }
        Ok(())
    }

    fn run(&self, seq: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Step>, Vec<f64>)> {
        self.check(seq)?;
        let h_n = self.config.hidden_size;
        let f = self.config.feat_dim;
        let [wz, uz, bz, wr, ur, br, wh, uh, bh, wd, bd] = self.blocks();
        let mut h = vec![0.0; h_n];
        let mut hidden = Vec::with_capacity(seq.len());
        let mut steps = Vec::with_capacity(seq.len());
        for x in seq {
            let mut z = affine(wz, x, f, bz);
            add_matvec(&mut z, uz, &h, h_n);
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
            let mut r = affine(wr, x, f, br);
            add_matvec(&mut r, ur, &h, h_n);
            r.iter_mut().for_each(|v| *v = sigmoid(*v));
            let rh: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
            let mut cand = affine(wh, x, f, bh);
            add_matvec(&mut cand, uh, &rh, h_n);
            cand.iter_mut().for_each(|v| *v = v.tanh());
            let next: Vec<f64> = (0..h_n).map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i]).collect();
            steps.push(Step {
                z,
                r,
                cand,
                h_prev: std::mem::replace(&mut h, next.clone()),
                rh,
            });
            hidden.push(next);
        }
        let flat: Vec<f64> = hidden.concat();
        let logits = affine(wd, &flat, flat.len(), bd);
        Ok((hidden, steps, softmax(&logits)))
    }

    fn blocks(&self) -> [&[f64]; 11] {
        std::array::from_fn(|i| self.block(i))
    }
}

fn affine(w: &[f64], x: &[f64], cols: usize, b: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(i, bi)| bi + w[i * cols..(i + 1) * cols].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

fn add_matvec(out: &mut [f64], w: &[f64], x: &[f64], cols: usize) {
    for (i, o) in out.iter_mut().enumerate() {
        *o += w[i * cols..(i + 1) * cols].iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

/// `out += W^T d` for `W` of shape `d.len() x cols`.
fn add_tmatvec(out: &mut [f64], w: &[f64], d: &[f64], cols: usize) {
    for (i, di) in d.iter().enumerate() {
        if *di == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(&w[i * cols..(i + 1) * cols]) {
            *o += a * di;
        }
    }
}

/// `G += d x^T`.
fn add_outer(g: &mut [f64], d: &[f64], x: &[f64]) {
    let cols = x.len();
    for (i, di) in d.iter().enumerate() {
        if *di == 0.0 {
            continue;
        }
        for (gv, xv) in g[i * cols..(i + 1) * cols].iter_mut().zip(x) {
            *gv += di * xv;
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

impl Network for GruNet {
    fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    fn input_len(&self) -> usize {
        self.config.input_len()
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.run(&self.reshape(x)?)?.2)
    }

    fn loss_and_grad_raw(&self, xs: &[&[f64]], ys: &[usize]) -> Result<(f64, Vec<f64>)> {
        let c = self.config;
        let (h_n, f, t) = (c.hidden_size, c.feat_dim, c.seq_len);
        let o = self.offsets;
        let [_, uz, _, _, ur, _, _, uh, _, wd, _] = self.blocks();
        let mut g = vec![0.0; self.theta.len()];
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let seq = self.reshape(x)?;
            let (hidden, steps, probs) = self.run(&seq)?;
            loss -= probs[y].max(f64::MIN_POSITIVE).ln();
            let mut dlogit = probs;
            dlogit[y] -= 1.0;
            dlogit.iter_mut().for_each(|v| *v *= scale);
            let flat = hidden.concat();
            add_outer(&mut g[o[9]..o[10]], &dlogit, &flat);
            for (gb, d) in g[o[10]..o[11]].iter_mut().zip(&dlogit) {
                *gb += d;
            }
            let mut dflat = vec![0.0; t * h_n];
            add_tmatvec(&mut dflat, wd, &dlogit, t * h_n);

            let mut dh = vec![0.0; h_n];
            for s in (0..t).rev() {
                let st = &steps[s];
                for (d, v) in dh.iter_mut().zip(&dflat[s * h_n..(s + 1) * h_n]) {
                    *d += v;
                }
                let mut da_z = vec![0.0; h_n];
                let mut da_h = vec![0.0; h_n];
                let mut dh_prev = vec![0.0; h_n];
                for i in 0..h_n {
                    let z = st.z[i];
                    da_z[i] = dh[i] * (st.cand[i] - st.h_prev[i]) * z * (1.0 - z);
                    da_h[i] = dh[i] * z * (1.0 - st.cand[i] * st.cand[i]);
                    dh_prev[i] = dh[i] * (1.0 - z);
                }
                let mut drh = vec![0.0; h_n];
                add_tmatvec(&mut drh, uh, &da_h, h_n);
                let da_r: Vec<f64> = (0..h_n)
                    .map(|i| drh[i] * st.h_prev[i] * st.r[i] * (1.0 - st.r[i]))
                    .collect();
                for i in 0..h_n {
                    dh_prev[i] += drh[i] * st.r[i];
                }
                add_tmatvec(&mut dh_prev, uz, &da_z, h_n);
                add_tmatvec(&mut dh_prev, ur, &da_r, h_n);

                let x = &seq[s];
                for (k, (da, hin)) in [(&da_z, &st.h_prev), (&da_r, &st.h_prev), (&da_h, &st.rh)]
                    .into_iter()
                    .enumerate()
                {
                    let base = 3 * k;
                    add_outer(&mut g[o[base]..o[base + 1]], da, x);
                    add_outer(&mut g[o[base + 1]..o[base + 2]], da, hin);
                    for (gb, d) in g[o[base + 2]..o[base + 3]].iter_mut().zip(da.iter()) {
                        *gb += d;
                    }
                }
                debug_assert_eq!(x.len(), f);
                dh = dh_prev;
            }
        }
        Ok((loss * scale, g))
    }
}
