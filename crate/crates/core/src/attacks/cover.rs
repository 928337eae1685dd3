use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AttackError, DictionaryEntry, HackingAlgorithm, ImitationSystem, Oracle, TaskRequest};
use crate::model::{LabelVector, SideInfo};
use crate::privacy::FeatureSampler;
use crate::rng;

/// Explicit finite cover of the slope family `{x -> a x : a in [low, high]}`
/// on one feature with law `features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    pub low: f64,
    pub high: f64,
    pub grid: Vec<f64>,
    pub epsilon: f64,
    pub sigma: f64,
    pub features: FeatureSampler,
}

impl CoverSpec {
    /// `points` equally spaced slopes from `low` to `high`. Fails when the
    /// resulting L2(P_X) radius exceeds `epsilon`.
    pub fn linear_grid(low: f64, high: f64, points: usize, epsilon: f64, sigma: f64, features: FeatureSampler) -> Result<Self, AttackError> {
        if !(low.is_finite() && high.is_finite() && low <= high) {
            return Err(AttackError::InvalidParameter(format!("slope range [{low}, {high}]")));
        }
        if points == 0 || (points == 1 && low < high) {
            return Err(AttackError::InvalidParameter(format!("{points} grid points cannot cover [{low}, {high}]")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) || !(epsilon > 0.0) {
            return Err(AttackError::InvalidParameter(format!("sigma {sigma}, epsilon {epsilon}")));
        }
        features.validate()?;
        if features.dim() != 1 {
            return Err(AttackError::InvalidParameter(format!("slope family needs 1 feature, sampler has {}", features.dim())));
        }
        let grid = if points == 1 {
            vec![low]
        } else {
            let h = (high - low) / (points - 1) as f64;
            (0..points).map(|j| if j + 1 == points { high } else { low + h * j as f64 }).collect()
        };
        let spec = Self { low, high, grid, epsilon, sigma, features };
        if spec.radius() > epsilon {
            return Err(AttackError::InvalidParameter(format!("grid radius {} exceeds epsilon {epsilon}", spec.radius())));
        }
        Ok(spec)
    }

    pub fn description(&self) -> String {
        format!("x -> a*x, a in [{}, {}], {} grid slopes", self.low, self.high, self.grid.len())
    }

    /// `E[x^2]` under the feature law.
    pub fn second_moment(&self) -> f64 {
        match &self.features {
            FeatureSampler::StandardNormal { .. } => 1.0,
            FeatureSampler::Gaussian { covariance } => covariance[0][0],
            FeatureSampler::UniformBox { lower, upper } => {
                let (l, u) = (lower[0], upper[0]);
                (l * l + l * u + u * u) / 3.0
            }
        }
    }

    /// `sup_a min_j ||a x - a_j x||_{L2(P_X)}`: half the largest gap times
    /// the feature's root second moment.
    pub fn radius(&self) -> f64 {
        let gap = self.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        0.5 * gap * self.second_moment().sqrt()
    }

    /// Kolmogorov entropy proxy: `ln(grid size)`.
    pub fn log_cover_size(&self) -> f64 {
        (self.grid.len() as f64).ln()
    }

    pub fn nearest_slope(&self, a: f64) -> f64 {
        self.grid.iter().copied().min_by(|x, y| (x - a).abs().total_cmp(&(y - a).abs())).expect("grid is nonempty")
    }

    /// Largest Monte-Carlo distance to the grid over `members` random family
    /// members, with `L2(P_X)` estimated from `samples` feature draws.
    pub fn verify_radius(&self, members: usize, samples: usize, seed: u64) -> Result<f64, AttackError> {
        let mut r = rng::stream(seed, "cover-radius", 0);
        let x = self.features.sample(samples, &mut r)?;
        let m2 = x.column(0).iter().map(|v| v * v).sum::<f64>() / samples as f64;
        let mut worst = 0.0f64;
        for _ in 0..members {
            let a = if self.low < self.high { r.random_range(self.low..=self.high) } else { self.low };
            worst = worst.max((a - self.nearest_slope(a)).abs() * m2.sqrt());
        }
        Ok(worst)
    }
}

/// `||y_j - y*||^2 / n`.
pub fn matching_statistic(y_j: &LabelVector, y_star: &LabelVector) -> Result<f64, AttackError> {
    if y_j.len() != y_star.len() {
        return Err(AttackError::InvalidParameter(format!("label lengths {} and {}", y_j.len(), y_star.len())));
    }
    let s: f64 = y_j.values().iter().zip(y_star.values()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(s / y_j.len() as f64)
}

/// Dictionary attack: one Stage I query per grid slope, each with its own
/// noisy task label from the task oracle, storing the Stage II function.
pub fn epsilon_cover_imitate(spec: &CoverSpec, oracle: &mut dyn Oracle, seed: u64) -> Result<ImitationSystem, AttackError> {
    if spec.grid.is_empty() {
        return Err(AttackError::EmptyDictionary);
    }
    oracle.add_side_info(SideInfo::FunctionFamily { description: spec.description() });
    oracle.add_side_info(SideInfo::NoiseLevel { sigma: spec.sigma });
    let mut entries = Vec::with_capacity(spec.grid.len());
    for (j, &a) in spec.grid.iter().enumerate() {
        let request = TaskRequest::Linear { beta: vec![a], sigma: spec.sigma, seed: rng::derive_seed(seed, "cover-task", j as u64) };
        let labels = oracle.generate_task(&request)?;
        let reply = oracle.query_labels(&labels)?;
        let Some(stage_two) = reply.stage_two else {
            return Err(AttackError::EmptyDictionary);
        };
        entries.push(DictionaryEntry { labels, stage_two });
    }
    Ok(ImitationSystem {
        attack: "epsilon-cover".into(),
        information: oracle.information().clone(),
        queries_used: oracle.queries_used(),
        algorithm: HackingAlgorithm::Dictionary { entries },
    })
}
