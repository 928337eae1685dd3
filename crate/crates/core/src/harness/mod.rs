//! Reproducible experiments: JSON config in, self-contained report out.
//!
//! A config names a registered scenario, a seed, a synthetic dataset and
//! Monte-Carlo sizes. Running it yields an [`ExperimentReport`] that echoes
//! the config with its SHA-256, so [`replay`] can rerun it and compare every
//! non-timing number bit for bit.

mod config;
mod data;
mod report;
mod run;
mod scenarios;

use thiserror::Error;

pub use config::{CovarianceSpec, DatasetSpec, ExperimentConfig, MonteCarlo};
pub use data::{feature_law, synth_dataset, task_law, SynthDataset};
pub use report::{to_json_17, Assertion, EstimateRow, ExperimentReport, Timing, Trace, Versions, ESTIMATES_FILE, REPORT_FILE};
pub use run::{apply_seed_override, find_scenario, list_scenarios, replay, run_experiment, selftest, ReplayOutcome, REPORT_FORMAT, SEED_ENV};
pub use scenarios::{
    cover_trial, default_config, rotation_trial, tamper_audit_outcomes, worked_table, AuditOutcome, CoverTrial, Runner, ScenarioInfo,
    ScenarioOutput, REGISTRY,
};

use crate::attacks::AttackError;
use crate::dp::DpError;
use crate::model::ModelError;
use crate::privacy::PrivacyError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("malformed report: {0}")]
    Report(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("config hash mismatch: report says {expected}, config hashes to {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
