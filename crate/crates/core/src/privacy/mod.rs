//! Monte-Carlo estimation of imitation privacy: the expected loss between
//! an imitation's prediction function and the module's, over tasks and
//! future inputs.

mod eps_delta;
mod estimate;
mod sampler;

use thiserror::Error;

use crate::model::ModelError;

pub use eps_delta::{check_eps_delta, ConstantBuilder, EpsDeltaReport, ImitationBuilder, RhoSettings, TrialEvidence, Verdict};
pub use estimate::{empirical_rho, estimate_rho, format_f64, ExactCopy, FixedImitation, Imitation, PrivacyEstimate, ZeroImitation};
pub use sampler::{CoefficientPrior, FeatureSampler, Task, TaskFamily, TaskSampler, TestSampler};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrivacyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("every test point of task {task} (seed {seed}) has a degenerate denominator")]
    TaskDegenerate { task: usize, seed: u64 },
    #[error("invalid sampler: {0}")]
    InvalidSampler(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch { context: &'static str, expected: usize, actual: usize },
    #[error("imitation family is empty")]
    EmptyFamily,
    #[error("building imitation {name} failed: {cause}")]
    Build { name: String, cause: String },
}
