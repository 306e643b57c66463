//! Signal decompositions shared by the denoisers.

pub mod cca;
pub mod dwt;
pub mod emd;
pub mod ssa;

pub use cca::{cca, cca_series, CcaResult};
pub use dwt::{dwt_forward, dwt_inverse, Wavelet, WaveletDecomposition};
pub use emd::{emd, emd_with, EmdConfig, ImfSet};
pub use ssa::{ssa_decompose, ssa_reconstruct, SsaModel};
