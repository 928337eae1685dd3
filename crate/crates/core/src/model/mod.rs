//! Data, labels, learners, modules and the prediction functions they induce.

mod data;
mod error;
mod info;
mod learner;
mod loss;
mod predict;

pub use data::{DataMatrix, LabelKind, LabelVector};
pub use error::ModelError;
pub use info::{InformationSet, Query, QueryBudget, RemoteFn, Response, ResponseMode, SideInfo};
pub use learner::{fit_module, Learner, Module};
pub use loss::{LossFn, EPS_DENOM};
pub use predict::{FittedModel, PredictionFn, Provenance};
