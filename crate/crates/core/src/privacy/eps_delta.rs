use serde::{Deserialize, Serialize};

use super::{estimate_rho, Imitation, PrivacyError, TaskSampler, TestSampler};
use crate::model::{LossFn, Module};
use crate::rng;

/// A randomized imitation construction, e.g. an attack that draws fresh
/// queries on every run.
pub trait ImitationBuilder: Sync {
    fn name(&self) -> String;
    fn build(&self, module: &Module, seed: u64) -> Result<Box<dyn Imitation + '_>, PrivacyError>;
}

/// Estimation settings shared by every trial.
#[derive(Debug, Clone)]
pub struct RhoSettings {
    pub task_sampler: TaskSampler,
    pub test_sampler: TestSampler,
    pub loss: LossFn,
    pub n_tasks: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Private,
    Breached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEvidence {
    pub trial: usize,
    pub best_imitation: String,
    pub rho_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsDeltaReport {
    pub verdict: Verdict,
    pub eps: f64,
    pub delta: f64,
    /// Fraction of trials where the best imitation reached `rho <= eps`.
    pub breach_probability: f64,
    pub evidence: Vec<TrialEvidence>,
}

/// Estimates `Pr[inf over family of rho <= eps]` from `n_trials` randomized
/// runs and declares a breach when it exceeds `delta`.
pub fn check_eps_delta(
    module: &Module,
    family: &[&dyn ImitationBuilder],
    eps: f64,
    delta: f64,
    n_trials: usize,
    settings: &RhoSettings,
    seed: u64,
) -> Result<EpsDeltaReport, PrivacyError> {
    if family.is_empty() {
        return Err(PrivacyError::EmptyFamily);
    }
    if !(0.0..=1.0).contains(&eps) || !(0.0..=1.0).contains(&delta) || n_trials == 0 {
        return Err(PrivacyError::InvalidParameter(format!("eps = {eps}, delta = {delta}, trials = {n_trials}")));
    }
    let mut evidence = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let mut best: Option<TrialEvidence> = None;
        for (k, builder) in family.iter().enumerate() {
            let build_seed = rng::derive_seed(seed, "eps-delta-build", (trial * family.len() + k) as u64);
            let imitation = builder.build(module, build_seed)?;
            let est = estimate_rho(
                module,
                imitation.as_ref(),
                &settings.task_sampler,
                &settings.test_sampler,
                settings.loss,
                settings.n_tasks,
                settings.n_test,
                rng::derive_seed(seed, "eps-delta-trial", trial as u64),
            )?;
            if best.as_ref().is_none_or(|b| est.rho_hat < b.rho_hat) {
                best = Some(TrialEvidence { trial, best_imitation: builder.name(), rho_hat: est.rho_hat });
            }
        }
        evidence.extend(best);
    }
    let hits = evidence.iter().filter(|e| e.rho_hat <= eps).count();
    let breach_probability = hits as f64 / n_trials as f64;
    let verdict = if breach_probability > delta { Verdict::Breached } else { Verdict::Private };
    Ok(EpsDeltaReport { verdict, eps, delta, breach_probability, evidence })
}

/// Builder for imitations that need no randomness.
pub struct ConstantBuilder<I> {
    pub name: String,
    pub imitation: I,
}

impl<I: Imitation + Clone + 'static> ImitationBuilder for ConstantBuilder<I> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn build(&self, _module: &Module, _seed: u64) -> Result<Box<dyn Imitation + '_>, PrivacyError> {
        Ok(Box::new(self.imitation.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataMatrix, Learner};
    use crate::privacy::{CoefficientPrior, ExactCopy, FeatureSampler, ZeroImitation};

    fn setup() -> (Module, RhoSettings) {
        let x = rng::gaussian_matrix(&mut rng::stream(1, "m", 0), 60, 2);
        let module = Module::new(Learner::ols(), DataMatrix::new(x).unwrap());
        let f = FeatureSampler::StandardNormal { dim: 2 };
        let settings = RhoSettings {
            task_sampler: TaskSampler::linear(f.clone(), CoefficientPrior::StandardNormal, 0.1),
            test_sampler: TestSampler::new(f),
            loss: LossFn::ScaledL2,
            n_tasks: 4,
            n_test: 50,
        };
        (module, settings)
    }

    #[test]
    fn exact_copy_breaches() {
        let (module, settings) = setup();
        let b = ConstantBuilder { name: "copy".into(), imitation: ExactCopy { module: module.clone(), seed: 0 } };
        let r = check_eps_delta(&module, &[&b], 0.0, 0.99, 5, &settings, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Breached);
        assert_eq!(r.breach_probability, 1.0);
    }

    #[test]
    fn zero_imitation_is_private() {
        let (module, settings) = setup();
        let b = ConstantBuilder { name: "zero".into(), imitation: ZeroImitation { dim: 2 } };
        let r = check_eps_delta(&module, &[&b], 0.5, 0.0, 5, &settings, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Private);
        assert!(r.evidence.iter().all(|e| e.rho_hat == 1.0));
    }

    #[test]
    fn family_minimum_is_reported() {
        let (module, settings) = setup();
        let zero = ConstantBuilder { name: "zero".into(), imitation: ZeroImitation { dim: 2 } };
        let copy = ConstantBuilder { name: "copy".into(), imitation: ExactCopy { module: module.clone(), seed: 0 } };
        let r = check_eps_delta(&module, &[&zero, &copy], 0.1, 0.5, 2, &settings, 3).unwrap();
        assert!(r.evidence.iter().all(|e| e.best_imitation == "copy"));
    }

    #[test]
    fn empty_family_rejected() {
        let (module, settings) = setup();
        assert!(matches!(check_eps_delta(&module, &[], 0.1, 0.1, 1, &settings, 0), Err(PrivacyError::EmptyFamily)));
    }
}
