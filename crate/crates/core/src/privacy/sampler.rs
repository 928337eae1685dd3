use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PrivacyError;
use crate::model::{DataMatrix, LabelVector};
use crate::rng;

/// Distribution of feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeatureSampler {
    StandardNormal { dim: usize },
    /// Zero-mean Gaussian with the given covariance.
    Gaussian { covariance: Vec<Vec<f64>> },
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
}

impl FeatureSampler {
    pub fn dim(&self) -> usize {
        match self {
            FeatureSampler::StandardNormal { dim } => *dim,
            FeatureSampler::Gaussian { covariance } => covariance.len(),
            FeatureSampler::UniformBox { lower, .. } => lower.len(),
        }
    }

    fn cholesky(covariance: &[Vec<f64>]) -> Result<DMatrix<f64>, PrivacyError> {
        let p = covariance.len();
        if covariance.iter().any(|r| r.len() != p) {
            return Err(PrivacyError::InvalidSampler("covariance must be square".into()));
        }
        let m = DMatrix::from_fn(p, p, |i, j| covariance[i][j]);
        if (0..p).any(|i| (0..p).any(|j| m[(i, j)] != m[(j, i)] || !m[(i, j)].is_finite())) {
            return Err(PrivacyError::InvalidSampler("covariance must be finite and symmetric".into()));
        }
        m.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| PrivacyError::InvalidSampler("covariance is not positive definite".into()))
    }

    pub fn validate(&self) -> Result<(), PrivacyError> {
        if self.dim() == 0 {
            return Err(PrivacyError::InvalidSampler("feature dimension must be positive".into()));
        }
        match self {
            FeatureSampler::StandardNormal { .. } => Ok(()),
            FeatureSampler::Gaussian { covariance } => Self::cholesky(covariance).map(|_| ()),
            FeatureSampler::UniformBox { lower, upper } => {
                if lower.len() != upper.len() || lower.iter().zip(upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
                    return Err(PrivacyError::InvalidSampler("box needs finite lower < upper per feature".into()));
                }
                Ok(())
            }
        }
    }

    /// `n` i.i.d. rows.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DataMatrix, PrivacyError> {
        self.validate()?;
        if n == 0 {
            return Err(PrivacyError::InvalidParameter("sample size must be positive".into()));
        }
        let m = match self {
            FeatureSampler::StandardNormal { dim } => rng::gaussian_matrix(rng, n, *dim),
            FeatureSampler::Gaussian { covariance } => {
                let l = Self::cholesky(covariance)?;
                rng::gaussian_matrix(rng, n, covariance.len()) * l.transpose()
            }
            FeatureSampler::UniformBox { lower, upper } => {
                let mut m = DMatrix::zeros(n, lower.len());
                for i in 0..n {
                    let row = rng::uniform_in_box(rng, lower, upper);
                    for (j, v) in row.into_iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
                m
            }
        };
        Ok(DataMatrix::new(m)?)
    }
}

/// Prior for per-task regression coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientPrior {
    StandardNormal,
    Fixed { beta: Vec<f64> },
    /// Each coordinate uniform on `[low, high]`.
    Uniform { low: f64, high: f64 },
}

/// Conditional law of the task label given features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskFamily {
    /// `y = X beta + eta`, `beta` from `prior`, `eta ~ N(0, noise_sigma^2)`.
    Linear { prior: CoefficientPrior, noise_sigma: f64 },
}

/// One sampled task: its parameters and the label vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub beta: Vec<f64>,
    pub labels: LabelVector,
}

/// Joint sampler of features and task labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSampler {
    pub features: FeatureSampler,
    pub family: TaskFamily,
}

impl TaskSampler {
    pub fn linear(features: FeatureSampler, prior: CoefficientPrior, noise_sigma: f64) -> Self {
        Self { features, family: TaskFamily::Linear { prior, noise_sigma } }
    }

    pub fn coefficients<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Result<Vec<f64>, PrivacyError> {
        let TaskFamily::Linear { prior, .. } = &self.family;
        match prior {
            CoefficientPrior::StandardNormal => Ok((0..p).map(|_| rng::standard_normal(rng)).collect()),
            CoefficientPrior::Fixed { beta } => {
                if beta.len() != p {
                    return Err(PrivacyError::DimensionMismatch { context: "fixed coefficients", expected: p, actual: beta.len() });
                }
                Ok(beta.clone())
            }
            CoefficientPrior::Uniform { low, high } => {
                if !(low <= high) {
                    return Err(PrivacyError::InvalidSampler("uniform prior needs low <= high".into()));
                }
                Ok((0..p).map(|_| low + (high - low) * rng.random::<f64>()).collect())
            }
        }
    }

    /// Task label on given rows.
    pub fn labels_for<R: Rng + ?Sized>(&self, x: &DataMatrix, rng: &mut R) -> Result<Task, PrivacyError> {
        let TaskFamily::Linear { noise_sigma, .. } = &self.family;
        if !(noise_sigma.is_finite() && *noise_sigma >= 0.0) {
            return Err(PrivacyError::InvalidSampler("noise sigma must be finite and nonnegative".into()));
        }
        let beta = self.coefficients(x.cols(), rng)?;
        let signal = x.matrix() * nalgebra::DVector::from_column_slice(&beta);
        let values = signal.iter().map(|s| s + noise_sigma * rng::standard_normal(rng)).collect();
        Ok(Task { beta, labels: LabelVector::regression(values)? })
    }

    /// Fresh features of size `n` and a task label on them.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(DataMatrix, Task), PrivacyError> {
        let x = self.features.sample(n, rng)?;
        let task = self.labels_for(&x, rng)?;
        Ok((x, task))
    }
}

/// Distribution of future inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSampler {
    pub features: FeatureSampler,
}

impl TestSampler {
    pub fn new(features: FeatureSampler) -> Self {
        Self { features }
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DataMatrix, PrivacyError> {
        self.features.sample(n, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_sampler_matches_covariance() {
        let cov = vec![vec![1.0, 0.5], vec![0.5, 2.0]];
        let s = FeatureSampler::Gaussian { covariance: cov.clone() };
        let x = s.sample(100_000, &mut rng::stream(1, "cov", 0)).unwrap();
        let g = x.matrix().transpose() * x.matrix() / 100_000.0;
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - cov[i][j]).abs() < 0.05);
            }
        }
    }

    #[test]
    fn non_pd_covariance_rejected() {
        let s = FeatureSampler::Gaussian { covariance: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(matches!(s.validate(), Err(PrivacyError::InvalidSampler(_))));
    }

    #[test]
    fn uniform_box_respects_bounds() {
        let s = FeatureSampler::UniformBox { lower: vec![-1.0; 3], upper: vec![1.0; 3] };
        let x = s.sample(1000, &mut rng::stream(2, "box", 0)).unwrap();
        assert!(x.matrix().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn noiseless_fixed_task_is_linear() {
        let t = TaskSampler::linear(FeatureSampler::StandardNormal { dim: 2 }, CoefficientPrior::Fixed { beta: vec![1.0, -2.0] }, 0.0);
        let x = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 0.5]]).unwrap();
        let task = t.labels_for(&x, &mut rng::stream(0, "t", 0)).unwrap();
        assert_eq!(task.labels.values(), &[-1.0, 1.0]);
    }
}
