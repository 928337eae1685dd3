use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::model::{FittedModel, InformationSet, LabelVector, Learner, ModelError, PredictionFn, Provenance, RemoteFn};
use crate::model::DataMatrix;
use crate::privacy::Imitation;

/// One stored Stage I exchange of a dictionary attack.
#[derive(Debug, Clone, Serialize)]
pub struct DictionaryEntry {
    pub labels: LabelVector,
    pub stage_two: RemoteFn,
}

/// How an imitation system turns a task label into a prediction function.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HackingAlgorithm {
    /// The same extracted function for every task.
    Fixed { function: PredictionFn },
    /// Fit `learner` on reconstructed features with the task label.
    Refit {
        learner: Learner,
        #[serde(skip)]
        data: DataMatrix,
    },
    /// Match the task label to the closest stored Stage I label and replay
    /// that entry's Stage II function.
    Dictionary { entries: Vec<DictionaryEntry> },
}

/// Information set plus hacking algorithm.
#[derive(Debug, Clone, Serialize)]
pub struct ImitationSystem {
    pub attack: String,
    pub information: InformationSet,
    pub queries_used: usize,
    pub algorithm: HackingAlgorithm,
}

/// Machine-readable summary of one attack run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub attack: String,
    pub target: String,
    pub queries_used: usize,
    pub side_info: Vec<String>,
    pub rho_hat: Option<f64>,
    pub wall_time_s: f64,
}

impl ImitationSystem {
    pub fn record(&self, target: &str, rho_hat: Option<f64>, wall_time_s: f64) -> AttackRecord {
        AttackRecord {
            attack: self.attack.clone(),
            target: target.to_string(),
            queries_used: self.queries_used,
            side_info: self.information.side_info_tags(),
            rho_hat,
            wall_time_s,
        }
    }

    /// Index and distance of the stored label closest to `y`.
    pub fn nearest_entry(&self, y: &LabelVector) -> Option<(usize, f64)> {
        let HackingAlgorithm::Dictionary { entries } = &self.algorithm else {
            return None;
        };
        let mut best: Option<(usize, f64)> = None;
        for (j, e) in entries.iter().enumerate() {
            if e.labels.len() != y.len() {
                continue;
            }
            let d: Vec<f64> = e.labels.values().iter().zip(y.values()).map(|(a, b)| a - b).collect();
            let dist = linalg::norm(&d);
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((j, dist));
            }
        }
        best
    }
}

impl Imitation for ImitationSystem {
    fn imitate(&self, y: &LabelVector) -> Result<PredictionFn, ModelError> {
        match &self.algorithm {
            HackingAlgorithm::Fixed { function } => Ok(function.clone()),
            HackingAlgorithm::Refit { learner, data } => learner.fit(data, y, 0),
            HackingAlgorithm::Dictionary { entries } => {
                let (j, _) = self.nearest_entry(y).ok_or(ModelError::Empty("dictionary entries matching the task length"))?;
                let remote = entries[j].stage_two.clone();
                let dim = remote.input_dim();
                Ok(PredictionFn::new(FittedModel::Remote(remote), dim, Provenance::note(&self.attack, format!("dictionary entry {j}"))))
            }
        }
    }
}
