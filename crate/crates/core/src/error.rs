// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use crate::client::FapMode;

/// Errors produced by sketch construction, estimation and the experiment harness.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("bucket count {0} is not a power of two >= 2")]
    InvalidWidth(usize),

    #[error("row count {0} is outside [1, 65536]")]
    InvalidDepth(usize),

    #[error("privacy budget must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("hadamard index ({row}, {col}) out of range for order {order}")]
    HadamardIndex { row: usize, col: usize, order: usize },

    #[error("sketches were built with different hash families")]
    FamilyMismatch,

    #[error("sketch parameters differ")]
    ParamsMismatch,

    #[error("sketch has already been restored")]
    AlreadyRestored,

    #[error("sketch has not been restored yet")]
    NotRestored,

    #[error("report (row {row}, col {col}) out of range for a {depth}x{width} sketch")]
    ReportOutOfRange { row: usize, col: usize, depth: usize, width: usize },

    #[error("report sign must be -1 or +1, got {0}")]
    InvalidSign(i8),

    #[error("candidate domain is empty")]
    EmptyDomain,

    #[error("sketch mode mismatch: expected {expected:?}, found {found:?}")]
    ModeMismatch { expected: FapMode, found: Option<FapMode> },

    #[error("group `{0}` is empty")]
    EmptyGroup(&'static str),

    #[error("value {value} outside domain of size {domain}")]
    OutOfDomain { value: u64, domain: u64 },

    #[error("k-RR calibration undefined: keep and switch probabilities are equal")]
    DegenerateCalibration,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
