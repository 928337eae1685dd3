//! Workbench for measuring how well a black-box learning service can be
//! imitated.
//!
//! A [`model::Module`] pairs a learner with private feature data and turns any
//! task label vector into a prediction function. Attack strategies in
//! [`attacks`] talk to a module only through an [`attacks::ApiView`] and
//! build imitating prediction functions from what they observe. The
//! [`privacy`] module scores an imitation against its module by Monte-Carlo
//! estimation of the expected loss between the two prediction functions,
//! averaged over tasks and future inputs.
//!
//! [`protocol`] runs the two-party assisted-learning exchange, [`dp`] covers
//! the Laplace mechanism and its interplay with imitation, and [`harness`]
//! wires everything into reproducible, replayable experiments.

pub mod attacks;
pub mod dp;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod model;
pub mod privacy;
pub mod protocol;
pub mod rng;

pub use model::{
    fit_module, DataMatrix, LabelKind, LabelVector, Learner, LossFn, Module, ModelError,
    PredictionFn,
};
