//! Attack strategies that build imitation systems from black-box queries
//! and declared side information.
//!
//! Every attack talks to its target through the [`Oracle`] trait. The live
//! implementation, [`ApiView`], logs each query and response; [`LogReplay`]
//! answers the same queries from a frozen log, which is how the black-box
//! discipline is audited.

mod api;
mod boundary;
mod cover;
mod equation;
mod path;
mod retrain;
mod rotation;
mod span;
mod system;
mod tree_order;

use thiserror::Error;

use crate::model::{ModelError, ResponseMode};
use crate::privacy::PrivacyError;

pub use api::{ApiView, LogReplay, Oracle, StageOneReply, Target, TaskRequest};
pub use boundary::{boundary_extract, bisection_queries, BoundaryConfig, BoundaryResult};
pub use cover::{epsilon_cover_imitate, matching_statistic, CoverSpec};
pub use equation::{equation_solving_extract, EquationSolvingResult};
pub use path::{path_finding_extract, Cell, PathFindingConfig, RecoveredPartition};
pub use retrain::{adaptive_retrain, disagreement, learning_curve, random_retrain, RetrainConfig, RetrainResult};
pub use rotation::{covariance_rotation_attack, cross_covariance, solve_rotation, RotationAttack, RotationAttackBuilder, RotationSolution};
pub use span::{recover_column_space, recover_column_space_with, SpanBasis, SpanRoute};
pub use system::{AttackRecord, DictionaryEntry, HackingAlgorithm, ImitationSystem};
pub use tree_order::{tree_structure_recover, OrderRecovery, ViolatedTriple};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },
    #[error("response mode {actual:?} cannot serve this request (need {expected})")]
    WrongMode { expected: &'static str, actual: ResponseMode },
    #[error("{k1} queries given, at least {required} needed")]
    InsufficientQueries { k1: usize, required: usize },
    #[error("only label {label} observed in {probes} probes")]
    OneClassObserved { label: i8, probes: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("inconsistent structure constraints: {} violated triples", violated.len())]
    Inconsistent { violated: Vec<ViolatedTriple> },
    #[error("replayed query {index} does not match the frozen log")]
    ReplayMismatch { index: usize },
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("task oracle not granted")]
    NoTaskOracle,
    #[error("empty dictionary")]
    EmptyDictionary,
}

impl From<AttackError> for ModelError {
    fn from(e: AttackError) -> Self {
        match e {
            AttackError::Model(m) => m,
            other => ModelError::FitFailure { learner: "attack".into(), cause: other.to_string() },
        }
    }
}
