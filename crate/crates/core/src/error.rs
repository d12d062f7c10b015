use alloc::string::String;

use crate::filter::UpdateDiagnostics;

/// Errors produced by the filtering, model and bandit routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("signal outside the admissible domain of the {model} model: {detail}")]
    SignalDomain { model: &'static str, detail: String },

    #[error("response outside the support of the {model} model: {detail}")]
    ResponseDomain { model: &'static str, detail: String },

    #[error("{what} is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite {
        what: &'static str,
        min_eigenvalue: f64,
    },

    #[error("{what} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { what: &'static str, asymmetry: f64 },

    #[error("covariance factorization failed after jitter up to {max_jitter:e}")]
    FactorizationFailed { max_jitter: f64 },

    #[error("innovation matrix Q is numerically singular; use update_stable")]
    SingularInnovation,

    #[error("{what} is singular")]
    Singular { what: &'static str },

    #[error("filtering failed: {reason}")]
    Filtering {
        reason: &'static str,
        diagnostics: UpdateDiagnostics,
    },

    #[error("invalid signal slices for product model: {0}")]
    InvalidSlices(String),

    #[error("arm {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },

    #[error("categorical predictor must be one-hot")]
    NotOneHot,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
