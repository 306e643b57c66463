//! Noise removal and emotion classification toolkit for ambulatory EEG.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`], [`filter`], [`normalize`]: waveform types, zero-phase IIR
//!   filtering, epoching and feature scaling.
//! * [`decompose`]: EMD, DWT, SSA and CCA.
//! * [`artifact`]: the denoisers built on top of the decompositions.
//! * [`noise`]: seeded contaminant generators, SNR mixing and metrics.
//! * [`features`]: Welch PSD, band powers, spectral entropy, moments.
//! * [`gru`]: GRU classifier trained with BPTT, a softmax baseline and
//!   evaluation.
//! * [`dataset`], [`report`]: CSV ingestion and report persistence.
//! * [`bench`]: the seeded Monte-Carlo denoising benchmark.

pub mod artifact;
pub mod bench;
pub mod dataset;
pub mod decompose;
pub mod error;
pub mod features;
pub mod filter;
pub mod gru;
pub mod linalg;
pub mod noise;
pub mod normalize;
pub mod report;
pub mod rng;
pub mod signal;
pub mod spectrum;

pub use error::{Error, Result};
pub use signal::{Recording, Signal};
