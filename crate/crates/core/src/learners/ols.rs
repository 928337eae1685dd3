use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::model::{DataMatrix, LabelVector, ModelError};

/// Least-squares linear model `x -> x^T beta (+ intercept)`.
///
/// For rank-deficient designs `coefficients` is the minimum-norm solution
/// and `rank_deficient` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
}

impl OlsModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.coefficients, x) + self.intercept.unwrap_or(0.0)
    }
}

pub fn fit_ols(x: &DataMatrix, y: &LabelVector) -> Result<OlsModel, ModelError> {
    fit_ols_with(x, y, false)
}

pub fn fit_ols_with(x: &DataMatrix, y: &LabelVector, intercept: bool) -> Result<OlsModel, ModelError> {
    let n = x.rows();
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { context: "ols labels", expected: n, actual: y.len() });
    }
    let p = x.cols();
    let design = if intercept {
        let mut d = DMatrix::from_element(n, p + 1, 1.0);
        d.columns_mut(0, p).copy_from(x.matrix());
        d
    } else {
        x.matrix().clone()
    };
    let ls = linalg::least_squares(&design, &y.to_dvector()).ok_or_else(|| ModelError::FitFailure {
        learner: "ols".into(),
        cause: "SVD did not converge".into(),
    })?;
    let mut coefficients: Vec<f64> = ls.solution.iter().copied().collect();
    let intercept = if intercept { coefficients.pop() } else { None };
    Ok(OlsModel { coefficients, intercept, rank: ls.rank, rank_deficient: ls.rank < design.ncols() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::DVector;

    #[test]
    fn identity_design() {
        let x = DataMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let m = fit_ols(&x, &LabelVector::regression(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(m.coefficients, vec![1.0, 2.0, 3.0]);
        assert!(!m.rank_deficient);
    }

    #[test]
    fn duplicated_column_flags_rank_deficiency() {
        let x = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![0.5, 0.5]]).unwrap();
        let m = fit_ols(&x, &LabelVector::regression(vec![1.0, 0.0, 2.0]).unwrap()).unwrap();
        assert!(m.rank_deficient);
        assert_eq!(m.rank, 1);
        // minimum norm splits the weight evenly across the copies
        assert!((m.coefficients[0] - m.coefficients[1]).abs() < 1e-12);
    }

    #[test]
    fn noiseless_gaussian_design_recovers_truth() {
        let mut r = rng::stream(11, "ols-test", 0);
        let xm = rng::gaussian_matrix(&mut r, 50, 3);
        let beta = DVector::from_vec(vec![0.7, -1.3, 2.1]);
        let y = &xm * &beta;
        let m = fit_ols(&DataMatrix::new(xm).unwrap(), &LabelVector::regression(y.iter().copied().collect()).unwrap())
            .unwrap();
        for (b, t) in m.coefficients.iter().zip(beta.iter()) {
            assert!((b - t).abs() < 1e-8);
        }
    }

    #[test]
    fn intercept_is_separated() {
        let x = DataMatrix::from_column(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let m = fit_ols_with(&x, &LabelVector::regression(vec![1.0, 3.0, 5.0, 7.0]).unwrap(), true).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((m.intercept.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_features_gives_zero_function() {
        let x = DataMatrix::no_features(3);
        let m = fit_ols(&x, &LabelVector::regression(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert!(m.coefficients.is_empty());
        assert_eq!(m.predict_row(&[]), 0.0);
    }
}
