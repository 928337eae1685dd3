use std::hash::{DefaultHasher, Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Feature matrix with one row per item. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self, ModelError> {
        if values.nrows() == 0 {
            return Err(ModelError::Empty("data matrix (no rows)"));
        }
        if values.ncols() == 0 {
            return Err(ModelError::Empty("data matrix (no columns)"));
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(ModelError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { values })
    }

    /// An `n x 0` matrix: a party that holds row identifiers but no features.
    pub fn no_features(rows: usize) -> Self {
        Self { values: DMatrix::zeros(rows, 0) }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        if n == 0 {
            return Err(ModelError::Empty("data matrix (no rows)"));
        }
        let p = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(ModelError::DimensionMismatch {
                context: "data rows",
                expected: p,
                actual: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn from_column(column: &[f64]) -> Result<Self, ModelError> {
        Self::new(DMatrix::from_column_slice(column.len(), 1, column))
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.rows()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn select_columns(&self, columns: &[usize]) -> Result<Self, ModelError> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.cols()) {
            return Err(ModelError::DimensionMismatch {
                context: "column selection",
                expected: self.cols(),
                actual: bad,
            });
        }
        Ok(Self { values: self.values.select_columns(columns) })
    }

    /// Column-concatenation `[self, other]` of two collated blocks.
    pub fn hstack(&self, other: &DataMatrix) -> Result<Self, ModelError> {
        if self.rows() != other.rows() {
            return Err(ModelError::DimensionMismatch {
                context: "column concatenation",
                expected: self.rows(),
                actual: other.rows(),
            });
        }
        let mut out = DMatrix::zeros(self.rows(), self.cols() + other.cols());
        out.columns_mut(0, self.cols()).copy_from(&self.values);
        out.columns_mut(self.cols(), other.cols()).copy_from(&other.values);
        Ok(Self { values: out })
    }

    /// Applies `f` entrywise; fails if the result is not finite.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Result<Self, ModelError> {
        Self::new(self.values.map(f))
    }

    /// Order-sensitive hash of shape and bit patterns, used for provenance.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.rows().hash(&mut h);
        self.cols().hash(&mut h);
        for v in self.values.iter() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelKind {
    Regression,
    ClassLabel,
    Probability,
}

/// Task response vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    values: Vec<f64>,
    kind: LabelKind,
}

impl LabelVector {
    pub fn new(values: Vec<f64>, kind: LabelKind) -> Result<Self, ModelError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::InvalidLabel(format!("entry {i} is not finite")));
        }
        if kind == LabelKind::Probability {
            if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(ModelError::InvalidLabel(format!(
                    "probability entry {i} = {} outside [0, 1]",
                    values[i]
                )));
            }
        }
        Ok(Self { values, kind })
    }

    pub fn regression(values: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(values, LabelKind::Regression)
    }

    pub fn class_labels(values: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(values, LabelKind::ClassLabel)
    }

    pub fn probabilities(values: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(values, LabelKind::Probability)
    }

    /// Standard basis vector `scale * e_index` of length `n`.
    pub fn basis(n: usize, index: usize, scale: f64) -> Result<Self, ModelError> {
        if index >= n {
            return Err(ModelError::DimensionMismatch {
                context: "basis label",
                expected: n,
                actual: index,
            });
        }
        let mut v = vec![0.0; n];
        v[index] = scale;
        Self::regression(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.values.len().hash(&mut h);
        for v in &self.values {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            DataMatrix::from_rows(&[vec![1.0, f64::NAN]]),
            Err(ModelError::NonFinite { row: 0, col: 1 })
        ));
        assert!(DataMatrix::from_rows(&[]).is_err());
        assert!(DataMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn probability_labels_are_bounded() {
        assert!(LabelVector::probabilities(vec![0.0, 0.5, 1.0]).is_ok());
        assert!(LabelVector::probabilities(vec![1.5]).is_err());
    }

    #[test]
    fn hstack_keeps_row_order() {
        let a = DataMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let b = DataMatrix::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let c = a.hstack(&b).unwrap();
        assert_eq!(c.row(1), vec![2.0, 5.0, 6.0]);
        let none = DataMatrix::no_features(2);
        assert_eq!(a.hstack(&none).unwrap(), a);
    }
}
