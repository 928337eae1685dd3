use serde::Serialize;

use super::{DataMatrix, LabelKind, LabelVector, ModelError, RemoteFn};
use crate::learners::{LinearClassifier, LogisticModel, LogisticOutput, OlsModel, RegressionTree};

/// Where a prediction function came from: which learner, and fingerprints of
/// the data and labels it was fitted on. Never the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Provenance {
    pub learner: String,
    pub data: Option<String>,
    pub labels: Option<String>,
    pub note: Option<String>,
}

impl Provenance {
    pub fn note(learner: &str, note: impl Into<String>) -> Self {
        Self { learner: learner.to_string(), note: Some(note.into()), ..Default::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedModel {
    Zero,
    Ols(OlsModel),
    Logistic(LogisticModel),
    Tree(RegressionTree),
    Classifier(LinearClassifier),
    /// Applies `inner` to the listed input columns only.
    ColumnSubset { columns: Vec<usize>, inner: Box<PredictionFn> },
    /// Evaluated on the owning party's side; only the scalar comes back.
    Remote(RemoteFn),
}

/// Evaluable map `R^p -> R` with a record of how it was produced.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionFn {
    model: FittedModel,
    input_dim: usize,
    provenance: Provenance,
}

impl PredictionFn {
    pub fn new(model: FittedModel, input_dim: usize, provenance: Provenance) -> Self {
        Self { model, input_dim, provenance }
    }

    pub fn zero(input_dim: usize) -> Self {
        Self::new(FittedModel::Zero, input_dim, Provenance::note("zero", "trivial imitation"))
    }

    pub fn linear(coefficients: Vec<f64>) -> Self {
        let dim = coefficients.len();
        let model = OlsModel { coefficients, intercept: None, rank: dim, rank_deficient: false };
        Self::new(FittedModel::Ols(model), dim, Provenance::note("ols", "explicit coefficients"))
    }

    pub fn model(&self) -> &FittedModel {
        &self.model
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn output_kind(&self) -> LabelKind {
        match &self.model {
            FittedModel::Zero | FittedModel::Ols(_) | FittedModel::Tree(_) => LabelKind::Regression,
            FittedModel::Logistic(m) => match m.output {
                LogisticOutput::Probability => LabelKind::Probability,
                LogisticOutput::Label => LabelKind::ClassLabel,
            },
            FittedModel::Classifier(_) => LabelKind::ClassLabel,
            FittedModel::ColumnSubset { inner, .. } => inner.output_kind(),
            FittedModel::Remote(r) => r.output_kind(),
        }
    }

    fn check_dim(&self, len: usize) -> Result<(), ModelError> {
        if len != self.input_dim {
            return Err(ModelError::DimensionMismatch {
                context: "prediction input",
                expected: self.input_dim,
                actual: len,
            });
        }
        Ok(())
    }

    /// `f(x)` for one input row.
    pub fn value(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.model {
            FittedModel::Zero => 0.0,
            FittedModel::Ols(m) => m.predict_row(x),
            FittedModel::Logistic(m) => m.predict_row(x),
            FittedModel::Tree(t) => t.predict_row(x),
            FittedModel::Classifier(c) => f64::from(c.classify(x)),
            FittedModel::ColumnSubset { columns, inner } => {
                let sub: Vec<f64> = columns.iter().map(|&c| x[c]).collect();
                inner.value_unchecked(&sub)
            }
            FittedModel::Remote(r) => r.value_unchecked(x),
        }
    }

    /// Leaf identifier reached by `x`, for tree models.
    pub fn leaf_id(&self, x: &[f64]) -> Result<Option<&str>, ModelError> {
        self.check_dim(x.len())?;
        Ok(match &self.model {
            FittedModel::Tree(t) => Some(t.leaf_id(x)),
            _ => None,
        })
    }

    /// Row-wise application: element `i` is `f(x_i)`.
    pub fn evaluate(&self, x: &DataMatrix) -> Result<LabelVector, ModelError> {
        self.check_dim(x.cols())?;
        let mut row = vec![0.0; x.cols()];
        let m = x.matrix();
        let values = (0..x.rows())
            .map(|i| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = m[(i, j)];
                }
                self.value_unchecked(&row)
            })
            .collect();
        LabelVector::new(values, self.output_kind())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_function_gives_zero_vector() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 4.0]]).unwrap();
        assert_eq!(PredictionFn::zero(2).evaluate(&x).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn linear_function_hand_arithmetic() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let f = PredictionFn::linear(vec![1.0, 1.0]);
        assert_eq!(f.evaluate(&x).unwrap().values(), &[3.0, 7.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let f = PredictionFn::linear(vec![1.0, 1.0]);
        assert!(f.value(&[1.0]).is_err());
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(f.evaluate(&x).is_err());
    }

    #[test]
    fn column_subset_reads_selected_inputs() {
        let inner = PredictionFn::linear(vec![2.0]);
        let f = PredictionFn::new(
            FittedModel::ColumnSubset { columns: vec![1], inner: Box::new(inner) },
            3,
            Provenance::default(),
        );
        assert_eq!(f.value(&[5.0, 1.5, 9.0]).unwrap(), 3.0);
    }
}
