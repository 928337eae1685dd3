use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::model::ModelError;

/// Linear threshold rule `sign(w . x + c)` with ties sent to `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    weights: Vec<f64>,
    offset: f64,
}

impl LinearClassifier {
    pub fn new(weights: Vec<f64>, offset: f64) -> Result<Self, ModelError> {
        if weights.is_empty() {
            return Err(ModelError::Empty("classifier weights"));
        }
        if weights.iter().any(|w| !w.is_finite()) || !offset.is_finite() {
            return Err(ModelError::InvalidParameter("classifier parameters must be finite".into()));
        }
        if linalg::norm(&weights) == 0.0 {
            return Err(ModelError::InvalidParameter("classifier weights must be nonzero".into()));
        }
        Ok(Self { weights, offset })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.weights, x) + self.offset
    }

    pub fn classify(&self, x: &[f64]) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// `(w, c) / ||(w, c)||`.
    pub fn unit_normal(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.offset);
        let n = linalg::norm(&v);
        v.iter().map(|a| a / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs_and_ties() {
        let c = LinearClassifier::new(vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(c.classify(&[2.0, 5.0]), 1);
        assert_eq!(c.classify(&[-2.0, 5.0]), -1);
        assert_eq!(c.classify(&[0.0, 5.0]), 1);
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(LinearClassifier::new(vec![0.0, 0.0], 1.0).is_err());
    }
}
