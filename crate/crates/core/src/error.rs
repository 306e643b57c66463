use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid decomposition depth: {0}")]
    InvalidLevels(String),

    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),

    #[error("adaptive stage {stage} diverged (output energy {ratio:.3e}x input)")]
    Divergence { stage: usize, ratio: f64 },

    #[error("unknown channel '{0}'")]
    UnknownChannel(String),

    #[error("unknown noise kind '{0}'")]
    UnknownNoiseKind(String),

    #[error("unknown method '{0}'")]
    UnknownMethod(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("{file}: row {row}, column '{column}': {message}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{file}: {message}")]
    Format { file: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
