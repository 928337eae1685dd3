//! Concrete learning algorithms used by modules and adversaries.

mod classifier;
mod logistic;
mod ols;
mod tree;

pub use classifier::LinearClassifier;
pub use logistic::{fit_logistic, LogisticConfig, LogisticModel, LogisticOutput};
pub use ols::{fit_ols, fit_ols_with, OlsModel};
pub use tree::{fit_tree, RegressionTree, TreeNode};
