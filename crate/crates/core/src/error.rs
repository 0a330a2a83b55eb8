use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} outside [{min}, {max}]")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("signal power is zero; SNR is undefined")]
    SilentSignal,

    #[error("class {class} has {have} records, need at least {need}")]
    TooFewRecords {
        class: &'static str,
        have: usize,
        need: usize,
    },

    #[error("malformed file at byte {offset}: {reason}")]
    Malformed { offset: u64, reason: String },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("non-finite gradient in parameter group {group}")]
    NonFiniteGradient { group: usize },

    #[error("unknown architecture `{0}` (expected one of: cnn-1a, cnn-1b, cnn-1c, cnn-1d)")]
    InvalidArchitecture(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
