// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("mode index {index} out of range for a {modes}-mode space")]
    InvalidMode { index: usize, modes: usize },

    #[error("occupation {occupation} of mode {mode} is not below the cutoff {cutoff}")]
    OccupationOutOfRange {
        mode: usize,
        occupation: usize,
        cutoff: usize,
    },

    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("incompatible model: {0}")]
    IncompatibleModel(String),

    #[error("sample time {time:e} s lies outside the sequence duration {duration:e} s")]
    SampleTimeOutOfRange { time: f64, duration: f64 },

    #[error("sample times must be finite, non-negative and strictly increasing")]
    InvalidSampleTimes,

    #[error("integrator failure: trace drift {drift:e} exceeds {limit:e}")]
    StepFailure { drift: f64, limit: f64 },

    #[error("state is not normalized: {0}")]
    Unnormalized(String),

    #[error("signal derivative below the numerical floor at every sample time")]
    DerivativeFloor,

    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
