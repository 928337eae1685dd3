use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DataMatrix, FittedModel, LabelVector, ModelError, PredictionFn, Provenance};
use crate::learners::{fit_logistic, fit_ols_with, fit_tree, LogisticConfig};

/// A learning algorithm together with its hyperparameters.
///
/// All learners here are deterministic; the seed accepted by [`Learner::fit`]
/// is part of the contract so randomized learners can be added without
/// changing call sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Learner {
    Ols {
        #[serde(default)]
        intercept: bool,
    },
    Logistic {
        max_iter: usize,
        tol: f64,
        #[serde(default)]
        ridge: f64,
    },
    Tree {
        max_depth: usize,
        min_leaf: usize,
    },
}

impl Learner {
    pub fn ols() -> Self {
        Learner::Ols { intercept: false }
    }

    pub fn tree(max_depth: usize, min_leaf: usize) -> Self {
        Learner::Tree { max_depth, min_leaf }
    }

    pub fn logistic() -> Self {
        let cfg = LogisticConfig::default();
        Learner::Logistic { max_iter: cfg.max_iter, tol: cfg.tol, ridge: cfg.ridge }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Learner::Ols { .. } => "ols",
            Learner::Logistic { .. } => "logistic",
            Learner::Tree { .. } => "tree",
        }
    }

    pub fn fit(&self, x: &DataMatrix, y: &LabelVector, _seed: u64) -> Result<PredictionFn, ModelError> {
        if y.len() != x.rows() {
            return Err(ModelError::DimensionMismatch {
                context: "labels vs data rows",
                expected: x.rows(),
                actual: y.len(),
            });
        }
        let model = match self {
            Learner::Ols { intercept } => FittedModel::Ols(fit_ols_with(x, y, *intercept)?),
            Learner::Logistic { max_iter, tol, ridge } => {
                let cfg = LogisticConfig { max_iter: *max_iter, tol: *tol, ridge: *ridge, ..Default::default() };
                FittedModel::Logistic(fit_logistic(x, y, &cfg)?)
            }
            Learner::Tree { max_depth, min_leaf } => FittedModel::Tree(fit_tree(x, y, *max_depth, *min_leaf)?),
        };
        let provenance = Provenance {
            learner: self.id().to_string(),
            data: Some(format!("{:016x}", x.fingerprint())),
            labels: Some(format!("{:016x}", y.fingerprint())),
            note: None,
        };
        Ok(PredictionFn::new(model, x.cols(), provenance))
    }
}

/// A learner paired with the private data it fits on, plus an optional
/// label it owns. Given any task label it induces a prediction function.
#[derive(Debug, Clone)]
pub struct Module {
    learner: Learner,
    data: Arc<DataMatrix>,
    label: Option<LabelVector>,
}

impl Module {
    pub fn new(learner: Learner, data: DataMatrix) -> Self {
        Self { learner, data: Arc::new(data), label: None }
    }

    pub fn with_label(learner: Learner, data: DataMatrix, label: LabelVector) -> Result<Self, ModelError> {
        if label.len() != data.rows() {
            return Err(ModelError::DimensionMismatch {
                context: "intrinsic label vs data rows",
                expected: data.rows(),
                actual: label.len(),
            });
        }
        Ok(Self { learner, data: Arc::new(data), label: Some(label) })
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn label(&self) -> Option<&LabelVector> {
        self.label.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    /// The same module with different private data (used to tamper with a
    /// target after its query log has been frozen).
    pub fn with_data(&self, data: DataMatrix) -> Self {
        Self { learner: self.learner.clone(), data: Arc::new(data), label: self.label.clone() }
    }
}

/// Prediction function `f_{M,y}` induced by `module` on task label `y`.
pub fn fit_module(module: &Module, y: &LabelVector, seed: u64) -> Result<PredictionFn, ModelError> {
    module.learner.fit(&module.data, y, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_on_ones_column_interpolates_constant() {
        let m = Module::new(Learner::ols(), DataMatrix::from_column(&[1.0; 4]).unwrap());
        let f = fit_module(&m, &LabelVector::regression(vec![2.0; 4]).unwrap(), 0).unwrap();
        match f.model() {
            FittedModel::Ols(o) => assert!((o.coefficients[0] - 2.0).abs() < 1e-14),
            other => panic!("unexpected model {other:?}"),
        }
        assert!((f.value(&[3.0]).unwrap() - 6.0).abs() < 1e-13);
    }

    #[test]
    fn orthonormal_design_recovers_first_basis_vector() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = DataMatrix::from_rows(&[vec![s, s], vec![s, -s], vec![0.0, 0.0]]).unwrap();
        let m = Module::new(Learner::ols(), x.clone());
        let f = fit_module(&m, &LabelVector::regression(x.column(0)).unwrap(), 0).unwrap();
        let FittedModel::Ols(o) = f.model() else { panic!() };
        assert!((o.coefficients[0] - 1.0).abs() < 1e-14);
        assert!(o.coefficients[1].abs() < 1e-14);
    }

    #[test]
    fn stump_on_worked_example_data() {
        let x = DataMatrix::from_column(&[7.0, 1.0, 10.0, 5.0, 18.0, 9.0]).unwrap();
        let m = Module::new(Learner::tree(1, 1), x.clone());
        let f = fit_module(&m, &LabelVector::basis(6, 2, 1.0).unwrap(), 0).unwrap();
        let fitted = f.evaluate(&x).unwrap();
        assert_eq!(fitted.values(), &[0.0, 0.0, 0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn fitting_is_bit_identical_across_calls() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.3], vec![0.2, 1.0], vec![-1.0, 0.5], vec![0.4, -0.7]]).unwrap();
        let y = LabelVector::regression(vec![0.1, 0.7, -0.2, 0.9]).unwrap();
        for learner in [Learner::ols(), Learner::tree(3, 1)] {
            let m = Module::new(learner, x.clone());
            let a = fit_module(&m, &y, 5).unwrap().evaluate(&x).unwrap();
            let b = fit_module(&m, &y, 5).unwrap().evaluate(&x).unwrap();
            let bits = |v: &LabelVector| v.values().iter().map(|f| f.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn label_length_mismatch_is_reported() {
        let m = Module::new(Learner::ols(), DataMatrix::from_column(&[1.0, 2.0]).unwrap());
        let err = fit_module(&m, &LabelVector::regression(vec![1.0]).unwrap(), 0).unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { expected: 2, actual: 1, .. }));
    }
}
