use serde::Serialize;

use super::api::expect_label;
use super::{AttackError, HackingAlgorithm, ImitationSystem, Oracle};
use crate::learners::{fit_logistic, LinearClassifier, LogisticConfig};
use crate::linalg;
use crate::model::{DataMatrix, FittedModel, LabelVector, PredictionFn, Provenance, ResponseMode, SideInfo};
use crate::rng;

#[derive(Debug, Clone)]
pub struct RetrainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Total label queries `n`.
    pub budget: usize,
    /// Queries per round `m`; round 0 is random, later rounds are adaptive.
    pub batch: usize,
    /// Ridge penalty of the logistic hypothesis.
    pub ridge: f64,
}

impl RetrainConfig {
    pub fn new(p: usize, budget: usize, batch: usize) -> Self {
        Self { lower: vec![-10.0; p], upper: vec![10.0; p], budget, batch, ridge: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RetrainResult {
    /// Imitation after each round, keyed by queries used so far.
    pub snapshots: Vec<(usize, PredictionFn)>,
    #[serde(skip)]
    pub system: ImitationSystem,
}

fn classifier_function(c: LinearClassifier, round: usize) -> PredictionFn {
    let p = c.dim();
    PredictionFn::new(FittedModel::Classifier(c), p, Provenance::note("retrain", format!("round {round}")))
}

/// Ridge logistic fit on +-1 labels, read as a linear classifier. With one
/// class observed the result is the constant rule for that class.
fn train(points: &[Vec<f64>], labels: &[f64], ridge: f64) -> Result<(LinearClassifier, bool), AttackError> {
    let p = points[0].len();
    let constant = |label: f64| {
        let mut w = vec![0.0; p];
        w[0] = 1e-12;
        LinearClassifier::new(w, label).map(|c| (c, false))
    };
    if labels.iter().all(|&l| l == labels[0]) {
        return Ok(constant(labels[0])?);
    }
    let x = DataMatrix::from_rows(points)?;
    let y = LabelVector::class_labels(labels.iter().map(|&l| if l > 0.0 { 1.0 } else { 0.0 }).collect())?;
    let model = fit_logistic(&x, &y, &LogisticConfig { ridge, ..Default::default() })?;
    if linalg::norm(&model.weights) == 0.0 {
        return Ok(constant(if model.bias >= 0.0 { 1.0 } else { -1.0 })?);
    }
    Ok((LinearClassifier::new(model.weights, model.bias)?, true))
}

/// Point of the hyperplane `w . x + c = 0` nearest to `r`, clipped to the box.
fn project(c: &LinearClassifier, r: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let w = c.weights();
    let step = c.decision(r) / linalg::dot(w, w);
    r.iter()
        .zip(w)
        .enumerate()
        .map(|(j, (x, wj))| (x - step * wj).clamp(lower[j], upper[j]))
        .collect()
}

/// Adaptive retraining with label-only queries.
///
/// Round 0 labels `m` uniform points of the box and trains the hypothesis.
/// Each of the `(n - m) / m` later rounds draws `m` uniform points, moves
/// each onto the current hypothesis' decision boundary (the least confident
/// points), queries their labels and retrains on everything seen so far.
pub fn adaptive_retrain(oracle: &mut dyn Oracle, cfg: &RetrainConfig, seed: u64) -> Result<RetrainResult, AttackError> {
    if oracle.mode() != ResponseMode::Label {
        return Err(AttackError::WrongMode { expected: "label", actual: oracle.mode() });
    }
    if cfg.batch == 0 || cfg.batch > cfg.budget || !cfg.budget.is_multiple_of(cfg.batch) {
        return Err(AttackError::InvalidBudget(format!("budget {} is not a positive multiple of batch {}", cfg.budget, cfg.batch)));
    }
    let p = cfg.lower.len();
    if p == 0 || cfg.upper.len() != p {
        return Err(AttackError::InvalidParameter("retraining needs a nonempty box".into()));
    }
    oracle.add_side_info(SideInfo::FeatureBox { lower: cfg.lower.clone(), upper: cfg.upper.clone() });
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(cfg.budget);
    let mut labels: Vec<f64> = Vec::with_capacity(cfg.budget);
    let mut snapshots = Vec::new();
    let mut current: Option<(LinearClassifier, bool)> = None;
    for round in 0..cfg.budget / cfg.batch {
        let mut r = rng::stream(seed, "retrain", round as u64);
        for _ in 0..cfg.batch {
            let u = rng::uniform_in_box(&mut r, &cfg.lower, &cfg.upper);
            let x = match &current {
                Some((c, true)) => project(c, &u, &cfg.lower, &cfg.upper),
                _ => u,
            };
            labels.push(f64::from(expect_label(oracle.query_row(&x)?)?));
            points.push(x);
        }
        let trained = train(&points, &labels, cfg.ridge)?;
        snapshots.push((points.len(), classifier_function(trained.0.clone(), round)));
        current = Some(trained);
    }
    let function = snapshots.last().expect("at least one round").1.clone();
    let system = ImitationSystem {
        attack: "adaptive-retraining".into(),
        information: oracle.information().clone(),
        queries_used: oracle.queries_used(),
        algorithm: HackingAlgorithm::Fixed { function },
    };
    Ok(RetrainResult { snapshots, system })
}

/// Retraining on `n` uniform queries; the `batch = budget` schedule.
pub fn random_retrain(oracle: &mut dyn Oracle, cfg: &RetrainConfig, seed: u64) -> Result<RetrainResult, AttackError> {
    adaptive_retrain(oracle, &RetrainConfig { batch: cfg.budget, ..cfg.clone() }, seed)
}

/// Fraction of probe rows on which two functions give different outputs.
pub fn disagreement(a: &PredictionFn, b: &PredictionFn, probes: &DataMatrix) -> Result<f64, AttackError> {
    let va = a.evaluate(probes)?;
    let vb = b.evaluate(probes)?;
    let differ = va.values().iter().zip(vb.values()).filter(|(x, y)| x != y).count();
    Ok(differ as f64 / probes.rows() as f64)
}

/// `(queries, zero-one disagreement with target)` for each snapshot.
pub fn learning_curve(result: &RetrainResult, target: &PredictionFn, probes: &DataMatrix) -> Result<Vec<(usize, f64)>, AttackError> {
    result.snapshots.iter().map(|(q, f)| Ok((*q, disagreement(f, target, probes)?))).collect()
}
