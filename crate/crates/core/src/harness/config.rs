use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::model::LossFn;

/// Joint covariance of the `p_a + p_b` Gaussian features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovarianceSpec {
    Identity,
    /// `Sigma_ij = rho^|i-j|`.
    Ar { rho: f64 },
    /// Unit variances, every off-diagonal entry `rho`.
    Equicorrelated { rho: f64 },
    Custom { matrix: Vec<Vec<f64>> },
}

impl CovarianceSpec {
    pub fn matrix(&self, p: usize) -> Result<Vec<Vec<f64>>, HarnessError> {
        let m: Vec<Vec<f64>> = match self {
            CovarianceSpec::Identity => (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            CovarianceSpec::Ar { rho } => (0..p).map(|i| (0..p).map(|j| rho.powi((i as i32 - j as i32).abs())).collect()).collect(),
            CovarianceSpec::Equicorrelated { rho } => {
                (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { *rho }).collect()).collect()
            }
            CovarianceSpec::Custom { matrix } => {
                if matrix.len() != p || matrix.iter().any(|r| r.len() != p) {
                    return Err(HarnessError::Config {
                        path: "dataset.covariance.matrix".into(),
                        message: format!("expected a {p}x{p} matrix"),
                    });
                }
                matrix.clone()
            }
        };
        let dm = nalgebra::DMatrix::from_fn(p, p, |i, j| m[i][j]);
        let symmetric = (0..p).all(|i| (0..p).all(|j| (m[i][j] - m[j][i]).abs() <= 1e-12 * (1.0 + m[i][j].abs())));
        if p > 0 && (!symmetric || dm.cholesky().is_none()) {
            return Err(HarnessError::Config {
                path: "dataset.covariance".into(),
                message: "covariance is not symmetric positive definite".into(),
            });
        }
        Ok(m)
    }
}

/// Synthetic data layout shared by the scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub n: usize,
    #[serde(default)]
    pub p_a: usize,
    pub p_b: usize,
    #[serde(default = "identity")]
    pub covariance: CovarianceSpec,
    #[serde(default)]
    pub noise_sigma: f64,
    /// When set, features are uniform on `[-bound, bound]` instead of Gaussian.
    #[serde(default)]
    pub bound: Option<f64>,
    /// Fixed task coefficients over all `p_a + p_b` features; standard
    /// normal draws per task when absent.
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
}

fn identity() -> CovarianceSpec {
    CovarianceSpec::Identity
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub n_tasks: usize,
    pub n_test: usize,
}

/// One experiment: a registered scenario plus everything it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub scenario: String,
    pub seed: u64,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub loss: LossFn,
    pub monte_carlo: MonteCarlo,
    /// Scenario-specific settings, checked by the scenario itself.
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

fn bad(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { path: path.into(), message: message.into() }
}

impl ExperimentConfig {
    /// Strict parse: unknown keys and type errors are reported with the
    /// field path.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::Config { path, message: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.experiment_id.is_empty() || self.experiment_id.contains(['/', '\\']) {
            return Err(bad("experiment_id", "must be nonempty and contain no path separators"));
        }
        let d = &self.dataset;
        if d.n == 0 {
            return Err(bad("dataset.n", "must be positive"));
        }
        if d.p_a + d.p_b == 0 {
            return Err(bad("dataset.p_b", "at least one feature is required"));
        }
        if !(d.noise_sigma.is_finite() && d.noise_sigma >= 0.0) {
            return Err(bad("dataset.noise_sigma", "must be finite and nonnegative"));
        }
        if let Some(b) = d.bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(bad("dataset.bound", "must be positive"));
            }
        } else {
            d.covariance.matrix(d.p_a + d.p_b)?;
        }
        if let Some(beta) = &d.beta {
            if beta.len() != d.p_a + d.p_b {
                return Err(bad("dataset.beta", format!("needs {} entries", d.p_a + d.p_b)));
            }
        }
        if self.monte_carlo.n_tasks == 0 {
            return Err(bad("monte_carlo.n_tasks", "must be positive"));
        }
        if self.monte_carlo.n_test == 0 {
            return Err(bad("monte_carlo.n_test", "must be positive"));
        }
        if !self.params.is_object() {
            return Err(bad("params", "must be an object"));
        }
        Ok(())
    }

    /// Canonical text: fixed field order, sorted parameter keys.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Scenario parameters as `T`, unknown keys rejected.
    pub fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T, HarnessError> {
        serde_path_to_error::deserialize(self.params.clone()).map_err(|e| HarnessError::Config {
            path: format!("params.{}", e.path()),
            message: e.into_inner().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment_id": "t",
        "scenario": "trivial-imitation",
        "seed": 1,
        "dataset": {"n": 10, "p_b": 2},
        "monte_carlo": {"n_tasks": 2, "n_test": 3}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.loss, LossFn::ScaledL2);
        assert_eq!(c.dataset.covariance, CovarianceSpec::Identity);
        assert!(c.params.as_object().unwrap().is_empty());
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let text = MINIMAL.replace("\"p_b\": 2", "\"p_b\": 2, \"colour\": 1");
        match ExperimentConfig::parse(&text) {
            Err(HarnessError::Config { path, message }) => {
                assert_eq!(path, "dataset.colour");
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_counts_rejected() {
        let text = MINIMAL.replace("\"n_tasks\": 2", "\"n_tasks\": 0");
        assert!(matches!(ExperimentConfig::parse(&text), Err(HarnessError::Config { path, .. }) if path == "monte_carlo.n_tasks"));
    }

    #[test]
    fn indefinite_covariance_rejected() {
        let text = MINIMAL.replace("\"p_b\": 2", r#""p_b": 2, "covariance": {"kind": "custom", "matrix": [[1, 2], [2, 1]]}"#);
        assert!(matches!(ExperimentConfig::parse(&text), Err(HarnessError::Config { path, .. }) if path == "dataset.covariance"));
        let ar = CovarianceSpec::Ar { rho: 0.5 }.matrix(3).unwrap();
        assert_eq!(ar[0][2], 0.25);
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap().canonical_json();
        let b = ExperimentConfig::parse(&a).unwrap().canonical_json();
        assert_eq!(a, b);
        assert_eq!(ExperimentConfig::parse(&a).unwrap().hash(), ExperimentConfig::parse(MINIMAL).unwrap().hash());
    }
}
