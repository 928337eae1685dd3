//! Two-party assisted learning on collated rows.
//!
//! Stage I: Alice fits the current target on her features and sends the
//! residual to Bob, who fits it on his features and sends his residual back;
//! this repeats for a number of rounds. Stage II: each party evaluates the sum
//! of its own per-round components on its own part of a new item and only
//! the scalars are added.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::model::{fit_module, DataMatrix, LabelVector, Learner, Module, ModelError, PredictionFn};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("round {round}: {party} fit failed: {source}")]
    Round {
        round: usize,
        party: &'static str,
        #[source]
        source: ModelError,
    },
    #[error("invalid protocol config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StopRule {
    FixedRounds,
    /// Stop when `(|e_prev| - |e_B,i|) / |e_prev| < theta`.
    RelativeImprovement { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub max_rounds: usize,
    pub stop: StopRule,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { max_rounds: 30, stop: StopRule::RelativeImprovement { theta: 1e-6 } }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.max_rounds == 0 {
            return Err(ProtocolError::InvalidConfig("max_rounds must be at least 1".into()));
        }
        if let StopRule::RelativeImprovement { theta } = self.stop {
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(ProtocolError::InvalidConfig(format!("theta must be positive, got {theta}")));
            }
        }
        Ok(())
    }
}

/// One Stage I round.
#[derive(Debug, Clone, Serialize)]
pub struct Round {
    pub index: usize,
    /// Residual Alice sends after fitting this round's target.
    pub alice_residual: Vec<f64>,
    /// Residual Bob sends back after fitting `alice_residual`.
    pub bob_residual: Vec<f64>,
    pub alice_component: PredictionFn,
    pub bob_component: PredictionFn,
    /// Training MSE `|e_B,i|^2 / n` after the round.
    pub mse: f64,
}

/// Full Stage I record.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolTranscript {
    pub config: ProtocolConfig,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub alice_residual_norm: f64,
    pub bob_residual_norm: f64,
    pub alice_component: String,
    pub bob_component: String,
    pub mse: f64,
}

impl ProtocolTranscript {
    pub fn mse_trace(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.mse).collect()
    }

    pub fn final_residual(&self) -> &[f64] {
        &self.rounds.last().expect("at least one round").bob_residual
    }

    /// Round, residual norms and component references only.
    pub fn summary(&self) -> Vec<RoundSummary> {
        let reference = |party: &str, r: usize, f: &PredictionFn| format!("{party}/round-{r}/{}", f.provenance().learner);
        self.rounds
            .iter()
            .map(|r| RoundSummary {
                round: r.index,
                alice_residual_norm: linalg::norm(&r.alice_residual),
                bob_residual_norm: linalg::norm(&r.bob_residual),
                alice_component: reference("alice", r.index, &r.alice_component),
                bob_component: reference("bob", r.index, &r.bob_component),
                mse: r.mse,
            })
            .collect()
    }

    /// `round,mse` lines.
    pub fn mse_csv(&self) -> String {
        let mut out = String::from("round,mse\n");
        for r in &self.rounds {
            out.push_str(&format!("{},{}\n", r.index, crate::privacy::format_f64(r.mse)));
        }
        out
    }

    /// Rebuilds the predictor from the recorded components.
    pub fn replay(&self) -> AssistedPredictor {
        AssistedPredictor {
            alice: self.rounds.iter().map(|r| r.alice_component.clone()).collect(),
            bob: BobSide { components: self.rounds.iter().map(|r| r.bob_component.clone()).collect() },
        }
    }
}

/// Bob's half of the predictor. Only scalar outputs leave it.
#[derive(Debug, Clone)]
pub struct BobSide {
    components: Vec<PredictionFn>,
}

impl BobSide {
    pub fn evaluate(&self, x_b: &[f64]) -> Result<f64, ModelError> {
        self.components.iter().map(|f| f.value(x_b)).sum()
    }

    pub fn rounds(&self) -> usize {
        self.components.len()
    }
}

/// `f_A(x_A) + f_B(x_B)`, each a sum of per-round components.
#[derive(Debug, Clone)]
pub struct AssistedPredictor {
    alice: Vec<PredictionFn>,
    bob: BobSide,
}

impl AssistedPredictor {
    pub fn alice_value(&self, x_a: &[f64]) -> Result<f64, ModelError> {
        self.alice.iter().map(|f| f.value(x_a)).sum()
    }

    pub fn bob(&self) -> &BobSide {
        &self.bob
    }

    /// Stage II mean squared error on collated held-out rows.
    pub fn test_mse(&self, x_a: &DataMatrix, x_b: &DataMatrix, y: &LabelVector) -> Result<f64, ModelError> {
        check_rows(x_a, x_b, y)?;
        let mut sse = 0.0;
        for i in 0..y.len() {
            let pred = stage2_predict(self, &x_a.row(i), &x_b.row(i))?;
            sse += (y.values()[i] - pred).powi(2);
        }
        Ok(sse / y.len() as f64)
    }
}

fn check_rows(x_a: &DataMatrix, x_b: &DataMatrix, y: &LabelVector) -> Result<(), ModelError> {
    if x_b.rows() != x_a.rows() {
        return Err(ModelError::DimensionMismatch { context: "collated rows", expected: x_a.rows(), actual: x_b.rows() });
    }
    if y.len() != x_a.rows() {
        return Err(ModelError::DimensionMismatch { context: "labels vs collated rows", expected: x_a.rows(), actual: y.len() });
    }
    Ok(())
}

/// Stage II prediction for one collated item.
pub fn stage2_predict(pred: &AssistedPredictor, x_a: &[f64], x_b: &[f64]) -> Result<f64, ModelError> {
    let a = pred.alice_value(x_a)?;
    let b = pred.bob.evaluate(x_b)?;
    Ok(a + b)
}

fn subtract(target: &[f64], fitted: &LabelVector) -> Vec<f64> {
    target.iter().zip(fitted.values()).map(|(t, f)| t - f).collect()
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// Stage I: alternating residual fitting, Alice first.
pub fn run_stage1(
    alice: &Module,
    bob: &Module,
    y: &LabelVector,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<(AssistedPredictor, ProtocolTranscript), ProtocolError> {
    cfg.validate()?;
    check_rows(alice.data(), bob.data(), y)?;
    let mut rounds: Vec<Round> = Vec::new();
    let mut target = y.values().to_vec();
    for i in 1..=cfg.max_rounds {
        let target_labels = LabelVector::regression(target.clone())?;
        let f_a = fit_module(alice, &target_labels, rng::derive_seed(seed, "alice", i as u64))
            .map_err(|source| ProtocolError::Round { round: i, party: "alice", source })?;
        let e_a = subtract(&target, &f_a.evaluate(alice.data())?);
        let e_a_labels = LabelVector::regression(e_a.clone())?;
        let f_b = fit_module(bob, &e_a_labels, rng::derive_seed(seed, "bob", i as u64))
            .map_err(|source| ProtocolError::Round { round: i, party: "bob", source })?;
        let e_b = subtract(&e_a, &f_b.evaluate(bob.data())?);
        let previous = match rounds.last() {
            Some(r) => linalg::norm(&r.bob_residual),
            None => linalg::norm(&e_a),
        };
        let current = linalg::norm(&e_b);
        let mse = mean_square(&e_b);
        log::debug!("assisted round {i}: |e_A| = {:.6e}, |e_B| = {current:.6e}", linalg::norm(&e_a));
        rounds.push(Round { index: i, alice_residual: e_a, bob_residual: e_b.clone(), alice_component: f_a, bob_component: f_b, mse });
        if let StopRule::RelativeImprovement { theta } = cfg.stop {
            if previous == 0.0 || (previous - current) / previous < theta {
                break;
            }
        }
        target = e_b;
    }
    let transcript = ProtocolTranscript { config: *cfg, rounds };
    Ok((transcript.replay(), transcript))
}

/// Fit on the concatenated features `[X_A, X_B]`.
#[derive(Debug, Clone)]
pub struct OracleFit {
    pub error: f64,
    pub function: PredictionFn,
}

pub fn oracle_fit(x_a: &DataMatrix, x_b: &DataMatrix, y: &LabelVector, learner: &Learner, seed: u64) -> Result<OracleFit, ModelError> {
    check_rows(x_a, x_b, y)?;
    let joint = x_a.hstack(x_b)?;
    let function = learner.fit(&joint, y, seed)?;
    let error = mean_square(&subtract(y.values(), &function.evaluate(&joint)?));
    Ok(OracleFit { error, function })
}
