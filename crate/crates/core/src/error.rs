use thiserror::Error;

/// Errors produced by the codec, its file formats and its numeric kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid kernel spec: {0}")]
    InvalidKernel(String),
    #[error("no points")]
    NoPoints,
    #[error("channel out of range: class {class_id} but heatmap has {channels} channels")]
    ChannelOutOfRange { class_id: usize, channels: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("threshold {0} out of range (0, 1)")]
    TauOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown category {name:?}; known categories: [{known}]")]
    UnknownCategory { name: String, known: String },
    #[error("bad {format} file: {message}")]
    Format {
        format: &'static str,
        message: String,
    },
    #[error("rejection budget exhausted after placing {placed} of {requested} boxes; try fewer boxes or a larger image")]
    RejectionBudget { placed: usize, requested: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
