//! Emotion classifier: a GRU network trained by backpropagation through
//! time, a softmax-regression baseline, data splitting and evaluation.
//!
//! Gate convention: `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
//! `h̃ = tanh(W_h x + U_h (r∘h) + b_h)`, `h' = (1 − z)∘h + z∘h̃`. The full
//! hidden sequence is flattened into a dense softmax layer.

mod eval;
mod io;
mod linear;
mod network;
mod optim;
mod split;
mod train;

use crate::error::{Error, Result};

pub use eval::{evaluate, evaluate_predictions, ConfusionMatrix, Evaluation};
pub use io::{load_model, save_model, write_history_csv, MODEL_FORMAT_VERSION};
pub use linear::LinearNet;
pub use network::{layout, GruForward, GruNet, ModelConfig, DEFAULT_SEQ_LEN};
pub use optim::{clip_global_norm, Adam};
pub use split::{stratified_split, Split};
pub use train::{
    train, train_linear_baseline, train_on_split, Classifier, EpochRecord, Net, TrainConfig, TrainOutcome,
};

/// A differentiable classifier over flat feature vectors.
pub trait Network {
    fn n_classes(&self) -> usize;
    /// Maximum accepted feature-vector length.
    fn input_len(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Class probabilities for one feature vector.
    fn proba(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Mean cross-entropy over the batch and its unclipped gradient.
    fn loss_and_grad_raw(&self, xs: &[&[f64]], ys: &[usize]) -> Result<(f64, Vec<f64>)>;
}

/// Mean cross-entropy and gradient, clipped to global L2 norm `grad_clip`.
/// Also returns the norm before clipping.
pub fn loss_and_grad(
    net: &dyn Network,
    xs: &[&[f64]],
    ys: &[usize],
    grad_clip: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "batch needs matching nonempty inputs and labels ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let c = net.n_classes();
    if let Some(&label) = ys.iter().find(|&&y| y >= c) {
        return Err(Error::LabelOutOfRange { label, n_classes: c });
    }
    let (loss, mut g) = net.loss_and_grad_raw(xs, ys)?;
    let norm = clip_global_norm(&mut g, grad_clip);
    Ok((loss, g, norm))
}
