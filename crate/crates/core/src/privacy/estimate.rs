use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PrivacyError, TaskSampler, TestSampler};
use crate::model::{fit_module, DataMatrix, LabelVector, LossFn, Module, ModelError, PredictionFn};
use crate::rng;

/// Per-task imitating function factory `y -> f_{I,y}`.
pub trait Imitation: Sync {
    fn imitate(&self, y: &LabelVector) -> Result<PredictionFn, ModelError>;
}

/// `f_{I,y} = 0` for every task.
#[derive(Debug, Clone)]
pub struct ZeroImitation {
    pub dim: usize,
}

impl Imitation for ZeroImitation {
    fn imitate(&self, _y: &LabelVector) -> Result<PredictionFn, ModelError> {
        Ok(PredictionFn::zero(self.dim))
    }
}

/// Refits the module itself; the imitation of a fully informed adversary.
#[derive(Debug, Clone)]
pub struct ExactCopy {
    pub module: Module,
    pub seed: u64,
}

impl Imitation for ExactCopy {
    fn imitate(&self, y: &LabelVector) -> Result<PredictionFn, ModelError> {
        fit_module(&self.module, y, self.seed)
    }
}

/// Returns the same function whatever the task.
#[derive(Debug, Clone)]
pub struct FixedImitation(pub PredictionFn);

impl Imitation for FixedImitation {
    fn imitate(&self, _y: &LabelVector) -> Result<PredictionFn, ModelError> {
        Ok(self.0.clone())
    }
}

/// Monte-Carlo estimate of the imitation privacy value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyEstimate {
    pub rho_hat: f64,
    pub std_error: f64,
    pub n_tasks: usize,
    pub n_test: usize,
    pub skipped_fraction: f64,
    pub per_task: Vec<f64>,
    pub loss: LossFn,
}

/// Fixed-width float rendering with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl PrivacyEstimate {
    pub const CSV_HEADER: &'static str = "experiment_id,rho_hat,std_error,n_tasks,n_test,skipped_fraction";

    pub fn csv_row(&self, experiment_id: &str) -> String {
        format!(
            "{experiment_id},{},{},{},{},{}",
            format_f64(self.rho_hat),
            format_f64(self.std_error),
            self.n_tasks,
            self.n_test,
            format_f64(self.skipped_fraction)
        )
    }

    fn from_tasks(outcomes: Vec<TaskOutcome>, n_test: usize, loss: LossFn) -> Self {
        let n_tasks = outcomes.len();
        let per_task: Vec<f64> = outcomes.iter().map(|o| o.loss).collect();
        let skipped: usize = outcomes.iter().map(|o| o.skipped).sum();
        let rho_hat = per_task.iter().sum::<f64>() / n_tasks as f64;
        let std_error = if n_tasks > 1 {
            let var = per_task.iter().map(|l| (l - rho_hat).powi(2)).sum::<f64>() / (n_tasks - 1) as f64;
            (var / n_tasks as f64).sqrt()
        } else {
            0.0
        };
        Self {
            rho_hat,
            std_error,
            n_tasks,
            n_test,
            skipped_fraction: skipped as f64 / (n_tasks * n_test) as f64,
            per_task,
            loss,
        }
    }
}

struct TaskOutcome {
    loss: f64,
    skipped: usize,
}

fn task_loss(
    f_imitation: &PredictionFn,
    f_module: &PredictionFn,
    points: &DataMatrix,
    loss: LossFn,
    task: usize,
    seed: u64,
) -> Result<TaskOutcome, PrivacyError> {
    let a = f_imitation.evaluate(points)?;
    let b = f_module.evaluate(points)?;
    let (mut num, mut den, mut skipped) = (0.0, 0.0, 0usize);
    for (&ai, &bi) in a.values().iter().zip(b.values()) {
        match loss.contribution(ai, bi) {
            Some((n, d)) => {
                num += n;
                den += d;
            }
            None => skipped += 1,
        }
    }
    if den <= loss.min_denominator() {
        return Err(PrivacyError::TaskDegenerate { task, seed });
    }
    Ok(TaskOutcome { loss: num / den, skipped })
}

fn check_dims(module: &Module, test_dim: usize) -> Result<(), PrivacyError> {
    if module.dim() != test_dim {
        return Err(PrivacyError::DimensionMismatch { context: "test sampler vs module", expected: module.dim(), actual: test_dim });
    }
    Ok(())
}

/// Monte-Carlo imitation privacy.
///
/// Task `t` draws its label on the module's own rows from stream
/// `(seed, "task", t)`, fits the module with seed `derive(seed, "fit", t)`,
/// and compares both functions on `n_test` points from stream
/// `(seed, "test", t)`. Tasks run in parallel on the current rayon pool and
/// are merged in task order.
#[allow(clippy::too_many_arguments)]
pub fn estimate_rho(
    module: &Module,
    imitation: &dyn Imitation,
    task_sampler: &TaskSampler,
    test_sampler: &TestSampler,
    loss: LossFn,
    n_tasks: usize,
    n_test: usize,
    seed: u64,
) -> Result<PrivacyEstimate, PrivacyError> {
    if n_tasks == 0 || n_test == 0 {
        return Err(PrivacyError::InvalidParameter("n_tasks and n_test must be positive".into()));
    }
    check_dims(module, test_sampler.dim())?;
    let outcomes = (0..n_tasks)
        .into_par_iter()
        .map(|t| {
            let task_seed = rng::derive_seed(seed, "task", t as u64);
            let task = task_sampler.labels_for(module.data(), &mut rng::stream(seed, "task", t as u64))?;
            let f_module = fit_module(module, &task.labels, rng::derive_seed(seed, "fit", t as u64))?;
            let f_imitation = imitation.imitate(&task.labels)?;
            let points = test_sampler.sample(n_test, &mut rng::stream(seed, "test", t as u64))?;
            task_loss(&f_imitation, &f_module, &points, loss, t, task_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PrivacyEstimate::from_tasks(outcomes, n_test, loss))
}

/// Empirical variant: the future-data expectation is replaced by the average
/// over the module's own rows, for each given task label.
pub fn empirical_rho(
    module: &Module,
    imitation: &dyn Imitation,
    tasks: &[LabelVector],
    loss: LossFn,
    seed: u64,
) -> Result<PrivacyEstimate, PrivacyError> {
    if tasks.is_empty() {
        return Err(PrivacyError::InvalidParameter("at least one task is required".into()));
    }
    let outcomes = tasks
        .par_iter()
        .enumerate()
        .map(|(t, y)| {
            let f_module = fit_module(module, y, rng::derive_seed(seed, "fit", t as u64))?;
            let f_imitation = imitation.imitate(y)?;
            task_loss(&f_imitation, &f_module, module.data(), loss, t, seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PrivacyEstimate::from_tasks(outcomes, module.rows(), loss))
}
