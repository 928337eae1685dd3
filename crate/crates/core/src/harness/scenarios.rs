use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::data::{feature_law, synth_dataset, task_law};
use super::{Assertion, EstimateRow, ExperimentConfig, HarnessError, Trace};
use crate::attacks::{
    adaptive_retrain, bisection_queries, boundary_extract, covariance_rotation_attack, disagreement, epsilon_cover_imitate,
    equation_solving_extract, learning_curve, matching_statistic, path_finding_extract, random_retrain, recover_column_space,
    tree_structure_recover, ApiView, AttackError, AttackRecord, BoundaryConfig, CoverSpec, HackingAlgorithm, ImitationSystem,
    LogReplay, Oracle, PathFindingConfig, RetrainConfig, RotationAttackBuilder, Target,
};
use crate::dp::{
    bounded_features, correction_error_curve, dp_breach_experiment, log_log_slope, partial_release_experiment,
    partial_release_population_rho, LaplaceParams, MeasureSettings, NonImplicationReport,
};
use crate::learners::{LinearClassifier, LogisticModel, LogisticOutput};
use crate::linalg;
use crate::model::{DataMatrix, FittedModel, LabelVector, Learner, LossFn, Module, PredictionFn, Provenance, ResponseMode};
use crate::privacy::{
    check_eps_delta, estimate_rho, format_f64, CoefficientPrior, ConstantBuilder, ExactCopy, FeatureSampler, ImitationBuilder,
    RhoSettings, TaskSampler, TestSampler, Verdict, ZeroImitation,
};
use crate::protocol::{oracle_fit, run_stage1, ProtocolConfig, StopRule};
use crate::rng;

/// What a scenario hands back to the runner.
#[derive(Debug, Default)]
pub struct ScenarioOutput {
    pub assertions: Vec<Assertion>,
    pub estimates: Vec<EstimateRow>,
    pub attack_records: Vec<AttackRecord>,
    pub results: Value,
    pub traces: Vec<Trace>,
}

pub type Runner = fn(&ExperimentConfig) -> Result<ScenarioOutput, HarnessError>;

/// Registry entry.
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// Library operations the scenario exercises.
    pub operations: &'static [&'static str],
    /// Keys under `params` that the scenario reads (all have defaults).
    pub params: &'static [&'static str],
    /// Cheap enough for `selftest`.
    pub quick: bool,
    pub run: Runner,
}

pub static REGISTRY: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "adaptive-retraining",
        description: "label-only retraining: adaptive boundary queries against random queries",
        operations: &["adaptive_retrain", "random_retrain", "learning_curve"],
        params: &["weights", "offset", "budget", "batch", "trials", "probes", "min_wins"],
        quick: false,
        run: adaptive_retraining,
    },
    ScenarioInfo {
        name: "assisted-oracle-convergence",
        description: "two-party residual exchange approaches the pooled-data fit",
        operations: &["run_stage1", "oracle_fit", "stage2_predict"],
        params: &["max_rounds", "theta", "tolerance"],
        quick: true,
        run: assisted_oracle_convergence,
    },
    ScenarioInfo {
        name: "boundary-extraction",
        description: "hyperplane recovery from class labels by bisection",
        operations: &["boundary_extract", "bisection_queries"],
        params: &["weights", "offset", "tol", "probes", "max_angle", "max_disagreement", "query_slack"],
        quick: true,
        run: boundary_extraction,
    },
    ScenarioInfo {
        name: "column-space-recovery",
        description: "span of an OLS service's features from k1 random label queries",
        operations: &["recover_column_space"],
        params: &["k1", "max_angle"],
        quick: true,
        run: column_space_recovery,
    },
    ScenarioInfo {
        name: "covariance-rotation-trend",
        description: "feature reconstruction from span plus cross-covariances; rho_hat against n",
        operations: &["recover_column_space", "solve_rotation", "estimate_rho"],
        params: &["n_grid", "sigma", "replicates", "threshold"],
        quick: false,
        run: covariance_rotation_trend,
    },
    ScenarioInfo {
        name: "dp-bias-correction",
        description: "Laplace release and bias-corrected regression against clean OLS",
        operations: &["laplace_mechanism", "bias_corrected_fit", "naive_fit"],
        params: &["alpha", "beta", "n_grid", "replicates", "slope_low", "slope_high", "min_wins"],
        quick: false,
        run: dp_bias_correction,
    },
    ScenarioInfo {
        name: "dp-non-implication",
        description: "a DP release that breaches imitation privacy and a non-DP release that keeps it",
        operations: &["dp_breach_experiment", "partial_release_experiment"],
        params: &["alpha", "n_grid", "replicates", "dp_threshold", "partial_n", "partial_p", "released", "rho_floor"],
        quick: false,
        run: dp_non_implication,
    },
    ScenarioInfo {
        name: "eps-delta-privacy",
        description: "(eps, delta) verdict for an OLS service against zero and rotation imitators",
        operations: &["check_eps_delta", "covariance_rotation_attack"],
        params: &["eps", "delta", "trials", "sigma", "expected"],
        quick: false,
        run: eps_delta_privacy,
    },
    ScenarioInfo {
        name: "epsilon-cover",
        description: "dictionary imitation from an explicit cover of a slope family",
        operations: &["epsilon_cover_imitate", "matching_statistic", "estimate_rho"],
        params: &["low", "high", "points", "epsilon", "sigma", "trials", "threshold", "min_pass", "concentration_sds"],
        quick: false,
        run: epsilon_cover,
    },
    ScenarioInfo {
        name: "equation-solving",
        description: "exact logistic extraction from p+1 probability queries",
        operations: &["equation_solving_extract"],
        params: &["targets", "p_max", "max_rel_error"],
        quick: true,
        run: equation_solving,
    },
    ScenarioInfo {
        name: "path-finding",
        description: "leaf-cell recovery of a fitted regression tree from leaf identifiers",
        operations: &["path_finding_extract"],
        params: &["max_depth", "min_leaf", "lower", "upper", "grid", "delta_split"],
        quick: true,
        run: path_finding,
    },
    ScenarioInfo {
        name: "tamper-audit",
        description: "attack outputs depend on the query log only",
        operations: &["ApiView::freeze", "LogReplay", "tamper_data"],
        params: &[],
        quick: true,
        run: tamper_audit,
    },
    ScenarioInfo {
        name: "tree-structure-end-to-end",
        description: "row order from basis-label queries to a stump service",
        operations: &["tree_structure_recover"],
        params: &["trials"],
        quick: true,
        run: tree_structure_end_to_end,
    },
    ScenarioInfo {
        name: "tree-structure-paper-table",
        description: "row order from the worked six-row response table",
        operations: &["tree_structure_recover"],
        params: &[],
        quick: true,
        run: tree_structure_paper_table,
    },
    ScenarioInfo {
        name: "trivial-imitation",
        description: "zero imitation scores 1 and self-imitation scores 0",
        operations: &["estimate_rho"],
        params: &[],
        quick: true,
        run: trivial_imitation,
    },
];

fn invalid(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { path: path.into(), message: message.into() }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn record(system: &ImitationSystem, target: &str, rho: Option<f64>, start: Instant) -> AttackRecord {
    system.record(target, rho, start.elapsed().as_secs_f64())
}

fn test_sampler(cfg: &ExperimentConfig) -> Result<TestSampler, HarnessError> {
    Ok(TestSampler::new(feature_law(&cfg.dataset)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

fn trivial_imitation(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let _: NoParams = cfg.params()?;
    if !matches!(cfg.loss, LossFn::ScaledL2 | LossFn::RelativeL2) {
        return Err(invalid("loss", "needs an output-normalized loss (scaled-l2 or relative-l2)"));
    }
    let data = synth_dataset(&cfg.dataset, cfg.seed)?;
    let module = Module::new(Learner::ols(), data.joint()?);
    let test = test_sampler(cfg)?;
    let mc = cfg.monte_carlo;
    let run = |imitation: &dyn crate::privacy::Imitation, role: &str| {
        estimate_rho(&module, imitation, &data.tasks, &test, cfg.loss, mc.n_tasks, mc.n_test, rng::derive_seed(cfg.seed, role, 0))
    };
    let zero = run(&ZeroImitation { dim: module.dim() }, "zero")?;
    let copy = run(&ExactCopy { module: module.clone(), seed: 0 }, "self")?;
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::new("zero-imitation-is-one", zero.rho_hat == 1.0, format_f64(zero.rho_hat)),
            Assertion::new("zero-imitation-has-no-variance", zero.std_error == 0.0, format_f64(zero.std_error)),
            Assertion::new("self-imitation-is-zero", copy.rho_hat == 0.0, format_f64(copy.rho_hat)),
        ],
        estimates: vec![EstimateRow::from_estimate("zero", &zero), EstimateRow::from_estimate("self", &copy)],
        results: json!({ "zero": zero.rho_hat, "self": copy.rho_hat }),
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EquationParams {
    targets: usize,
    p_max: usize,
    max_rel_error: f64,
}

impl Default for EquationParams {
    fn default() -> Self {
        Self { targets: 100, p_max: 5, max_rel_error: 1e-8 }
    }
}

fn logistic_target(p: usize, seed: u64, index: u64) -> LogisticModel {
    let mut r = rng::stream(seed, "logistic-target", index);
    let w: Vec<f64> = (0..p).map(|_| rng::standard_normal(&mut r)).collect();
    LogisticModel::new(w, rng::standard_normal(&mut r), LogisticOutput::Probability)
}

fn logistic_fn(m: LogisticModel) -> PredictionFn {
    let p = m.weights.len();
    PredictionFn::new(FittedModel::Logistic(m), p, Provenance::note("logistic", "target"))
}

fn equation_solving(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: EquationParams = cfg.params()?;
    if params.targets == 0 || params.p_max == 0 {
        return Err(invalid("params", "targets and p_max must be positive"));
    }
    let mut out = ScenarioOutput::default();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut exact_counts = true;
    for t in 0..params.targets {
        let p = 1 + t % params.p_max;
        let target = logistic_target(p, cfg.seed, t as u64);
        let mut view = ApiView::predictor(format!("logistic-{t}"), logistic_fn(target.clone()), ResponseMode::Probability)?;
        let start = Instant::now();
        let r = equation_solving_extract(&mut view, p, rng::derive_seed(cfg.seed, "equation", t as u64))?;
        let mut truth = target.weights.clone();
        truth.push(target.bias);
        let mut got = r.model.weights.clone();
        got.push(r.model.bias);
        let diff: Vec<f64> = got.iter().zip(&truth).map(|(a, b)| a - b).collect();
        let rel = linalg::norm(&diff) / linalg::norm(&truth);
        worst = worst.max(rel);
        exact_counts &= r.queries == p + 1 && view.queries_used() == p + 1;
        out.attack_records.push(record(&r.system, view.id(), None, start));
        rows.push(vec![t.to_string(), p.to_string(), r.queries.to_string(), format_f64(rel)]);
    }
    out.assertions.push(Assertion::at_most("max-relative-error", worst, params.max_rel_error));
    out.assertions.push(Assertion::new("p-plus-one-queries", exact_counts, "every target extracted with p+1 queries"));
    out.results = json!({ "targets": params.targets, "max_relative_error": worst });
    out.traces.push(Trace { file: "equation_errors.csv".into(), content: csv("target,p,queries,relative_error", rows) });
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SpanParams {
    k1: usize,
    max_angle: f64,
}

impl Default for SpanParams {
    fn default() -> Self {
        Self { k1: 3, max_angle: 1e-8 }
    }
}

fn column_space_recovery(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: SpanParams = cfg.params()?;
    let data = synth_dataset(&cfg.dataset, cfg.seed)?;
    let p = data.x_b.cols();
    let bob = Module::new(Learner::ols(), data.x_b.clone());
    let mut view = ApiView::service("bob", bob.clone(), ResponseMode::Residual)?;
    let start = Instant::now();
    let span = recover_column_space(&mut view, params.k1, p, rng::derive_seed(cfg.seed, "span", 0))?;
    let truth = linalg::orthonormal_basis(data.x_b.matrix(), linalg::RANK_RTOL).ok_or_else(|| AttackError::Singular("X_B".into()))?;
    let angles = linalg::principal_angles(&span.basis, &truth).ok_or_else(|| AttackError::Singular("principal angles".into()))?;
    let max_angle = angles.iter().copied().fold(0.0, f64::max);
    let system = ImitationSystem {
        attack: "column-space".into(),
        information: view.information().clone(),
        queries_used: view.queries_used(),
        algorithm: HackingAlgorithm::Refit { learner: Learner::ols(), data: DataMatrix::new(span.basis.clone())? },
    };
    let mut short = ApiView::service("bob", bob, ResponseMode::Residual)?;
    let refused = recover_column_space(&mut short, params.k1.saturating_sub(1), p, cfg.seed);
    let refused_ok = matches!(refused, Err(AttackError::InsufficientQueries { .. })) && short.queries_used() == 0;
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::new("full-rank", span.rank == p, format!("rank {} of {p}", span.rank)),
            Assertion::at_most("max-principal-angle", max_angle, params.max_angle),
            Assertion::new("k1-minus-one-refused", refused_ok, format!("{refused:?}").chars().take(120).collect::<String>()),
        ],
        attack_records: vec![record(&system, "bob", None, start)],
        results: json!({ "rank": span.rank, "queries": span.queries, "principal_angles": angles }),
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RotationParams {
    n_grid: Vec<usize>,
    sigma: f64,
    replicates: usize,
    threshold: f64,
}

impl Default for RotationParams {
    fn default() -> Self {
        Self { n_grid: vec![2_000, 20_000, 200_000], sigma: 0.1, replicates: 5, threshold: 0.05 }
    }
}

/// One covariance-rotation attack on fresh data of size `n`, scored with
/// `loss`.
pub fn rotation_trial(
    p: usize,
    n: usize,
    sigma: f64,
    loss: LossFn,
    n_tasks: usize,
    n_test: usize,
    seed: u64,
) -> Result<(f64, AttackRecord), HarnessError> {
    let features = FeatureSampler::StandardNormal { dim: p };
    let x = features.sample(n, &mut rng::stream(seed, "rotation-data", 0))?;
    let module = Module::new(Learner::ols(), x);
    let mut view = ApiView::service("bob", module.clone(), ResponseMode::Residual)?.with_task_oracle();
    let start = Instant::now();
    let attack = covariance_rotation_attack(&mut view, p, sigma, rng::derive_seed(seed, "rotation-attack", 0))?;
    let tasks = TaskSampler::linear(features.clone(), CoefficientPrior::StandardNormal, sigma);
    let est = estimate_rho(&module, &attack.system, &tasks, &TestSampler::new(features), loss, n_tasks, n_test, rng::derive_seed(seed, "rotation-rho", 0))?;
    Ok((est.rho_hat, record(&attack.system, "bob", Some(est.rho_hat), start)))
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn covariance_rotation_trend(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: RotationParams = cfg.params()?;
    if params.n_grid.is_empty() || params.replicates == 0 {
        return Err(invalid("params", "n_grid and replicates must be nonempty"));
    }
    let p = cfg.dataset.p_b;
    let mc = cfg.monte_carlo;
    let jobs: Vec<(usize, usize)> = (0..params.n_grid.len()).flat_map(|k| (0..params.replicates).map(move |r| (k, r))).collect();
    let trials = jobs
        .par_iter()
        .map(|&(k, r)| {
            let seed = rng::derive_seed(cfg.seed, "rotation-trial", (k * params.replicates + r) as u64);
            rotation_trial(p, params.n_grid[k], params.sigma, cfg.loss, mc.n_tasks, mc.n_test, seed)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mut out = ScenarioOutput::default();
    let mut curve = Vec::new();
    for (k, chunk) in trials.chunks(params.replicates).enumerate() {
        let rhos: Vec<f64> = chunk.iter().map(|t| t.0).collect();
        let (mean, se) = mean_and_se(&rhos);
        let n = params.n_grid[k];
        curve.push((n, mean, se));
        out.estimates.push(EstimateRow {
            label: format!("n={n}"),
            rho_hat: mean,
            std_error: se,
            n_tasks: mc.n_tasks * params.replicates,
            n_test: mc.n_test,
            skipped_fraction: 0.0,
        });
        out.attack_records.extend(chunk.iter().map(|t| t.1.clone()));
    }
    let decreasing = curve.windows(2).all(|w| w[1].1 < w[0].1);
    let last = curve.last().expect("nonempty grid").1;
    out.assertions.push(Assertion::new("strictly-decreasing", decreasing, format!("{:?}", curve.iter().map(|c| c.1).collect::<Vec<_>>())));
    out.assertions.push(Assertion::at_most("largest-n-rho", last, params.threshold));
    out.results = json!({ "loss": cfg.loss.id(), "curve": curve.iter().map(|c| json!({"n": c.0, "rho_hat": c.1, "std_error": c.2})).collect::<Vec<_>>() });
    out.traces.push(Trace {
        file: "rho_trend.csv".into(),
        content: csv("n,rho_hat,std_error", curve.iter().map(|c| vec![c.0.to_string(), format_f64(c.1), format_f64(c.2)])),
    });
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AssistedParams {
    max_rounds: usize,
    theta: Option<f64>,
    tolerance: f64,
}

impl Default for AssistedParams {
    fn default() -> Self {
        Self { max_rounds: 30, theta: None, tolerance: 0.01 }
    }
}

fn assisted_oracle_convergence(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: AssistedParams = cfg.params()?;
    let data = synth_dataset(&cfg.dataset, cfg.seed)?;
    let joint = data.joint()?;
    let task = data.tasks.labels_for(&joint, &mut rng::stream(cfg.seed, "assisted-task", 0))?;
    let stop = match params.theta {
        Some(theta) => StopRule::RelativeImprovement { theta },
        None => StopRule::FixedRounds,
    };
    let pcfg = ProtocolConfig { max_rounds: params.max_rounds, stop };
    let alice = Module::new(Learner::ols(), data.x_a.clone());
    let bob = Module::new(Learner::ols(), data.x_b.clone());
    let (_, transcript) = run_stage1(&alice, &bob, &task.labels, &pcfg, rng::derive_seed(cfg.seed, "assisted-run", 0))?;
    let oracle = oracle_fit(&data.x_a, &data.x_b, &task.labels, &Learner::ols(), 0)?;
    let trace = transcript.mse_trace();
    let last = *trace.last().expect("at least one round");
    let gap = (last - oracle.error).abs() / oracle.error;
    let monotone = trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::at_most("relative-gap-to-oracle", gap, params.tolerance),
            Assertion::new("mse-non-increasing", monotone, format!("{} rounds", trace.len())),
        ],
        results: json!({
            "rounds": transcript.summary(),
            "oracle_mse": oracle.error,
            "final_mse": last,
            "relative_gap": gap,
        }),
        traces: vec![Trace { file: "mse_trace.csv".into(), content: transcript.mse_csv() }],
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CorrectionParams {
    alpha: f64,
    beta: Vec<f64>,
    n_grid: Vec<usize>,
    replicates: usize,
    slope_low: f64,
    slope_high: f64,
    min_wins: usize,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        Self {
            alpha: 4.0,
            beta: vec![1.0, 1.0],
            n_grid: vec![1_000, 10_000, 100_000],
            replicates: 10,
            slope_low: -0.7,
            slope_high: -0.3,
            min_wins: 9,
        }
    }
}

fn dp_bias_correction(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: CorrectionParams = cfg.params()?;
    let b = cfg.dataset.bound.ok_or_else(|| invalid("dataset.bound", "the Laplace mechanism needs bounded features"))?;
    let lp = LaplaceParams::new(b, params.alpha)?;
    let identity = [(b, params.alpha), (1.0, 1.0), (1.0, 2.0), (0.5, 3.0)]
        .iter()
        .all(|&(b, a)| LaplaceParams::new(b, a).is_ok_and(|p| p.variance() == 8.0 * b * b / (a * a)));
    let points = correction_error_curve(lp, &params.beta, cfg.dataset.noise_sigma, &params.n_grid, params.replicates, cfg.seed)?;
    let slope = log_log_slope(&points);
    let min_wins = points.iter().map(|p| p.corrected_wins).min().unwrap_or(0);
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::new("tau2-identity", identity, format!("tau^2 = {}", format_f64(lp.variance()))),
            Assertion::new(
                "log-log-slope",
                (params.slope_low..=params.slope_high).contains(&slope),
                format!("{slope} in [{}, {}]", params.slope_low, params.slope_high),
            ),
            Assertion::new("corrected-beats-naive", min_wins >= params.min_wins, format!("fewest wins {min_wins}/{}", params.replicates)),
        ],
        results: json!({ "tau2": lp.variance(), "scale": lp.scale(), "slope": slope, "points": points }),
        traces: vec![Trace {
            file: "correction_error.csv".into(),
            content: csv(
                "n,rms_corrected,rms_naive,corrected_wins",
                points.iter().map(|p| vec![p.n.to_string(), format_f64(p.rms_corrected), format_f64(p.rms_naive), p.corrected_wins.to_string()]),
            ),
        }],
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NonImplicationParams {
    alpha: f64,
    n_grid: Vec<usize>,
    replicates: usize,
    dp_threshold: f64,
    partial_n: usize,
    partial_p: usize,
    released: Vec<usize>,
    rho_floor: f64,
}

impl Default for NonImplicationParams {
    fn default() -> Self {
        Self {
            alpha: 4.0,
            n_grid: vec![1_000, 10_000, 100_000],
            replicates: 10,
            dp_threshold: 0.05,
            partial_n: 10_000,
            partial_p: 4,
            released: vec![0],
            rho_floor: 0.3,
        }
    }
}

fn dp_non_implication(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: NonImplicationParams = cfg.params()?;
    let b = cfg.dataset.bound.ok_or_else(|| invalid("dataset.bound", "the Laplace mechanism needs bounded features"))?;
    let lp = LaplaceParams::new(b, params.alpha)?;
    let mc = cfg.monte_carlo;
    let settings = MeasureSettings { loss: cfg.loss, n_tasks: mc.n_tasks, n_test: mc.n_test };
    let dp_tasks = task_law(&cfg.dataset, bounded_features(cfg.dataset.p_b, b));
    let dp = dp_breach_experiment(lp, cfg.dataset.p_b, &params.n_grid, params.replicates, &dp_tasks, &settings, rng::derive_seed(cfg.seed, "dp-breach", 0))?;

    let features = FeatureSampler::StandardNormal { dim: params.partial_p };
    let x = features.sample(params.partial_n, &mut rng::stream(cfg.seed, "partial-data", 0))?;
    let module = Module::new(Learner::ols(), x);
    let beta = vec![1.0; params.partial_p];
    let tasks = TaskSampler::linear(features.clone(), CoefficientPrior::Fixed { beta: beta.clone() }, cfg.dataset.noise_sigma);
    let partial = partial_release_experiment(
        &module,
        &params.released,
        &tasks,
        &TestSampler::new(features),
        &settings,
        params.rho_floor,
        rng::derive_seed(cfg.seed, "partial", 0),
    )?;
    let population = partial_release_population_rho(&beta, &params.released, &vec![1.0; params.partial_p]);
    let report = NonImplicationReport::new(dp, params.dp_threshold, partial);
    let mut estimates: Vec<EstimateRow> = report
        .dp_release
        .curve
        .iter()
        .map(|c| EstimateRow { label: format!("dp/n={}", c.n), rho_hat: c.rho_hat, std_error: c.std_error, n_tasks: mc.n_tasks * params.replicates, n_test: mc.n_test, skipped_fraction: 0.0 })
        .collect();
    estimates.push(EstimateRow {
        label: "partial".into(),
        rho_hat: report.partial_release.rho_partial,
        std_error: report.partial_release.rho_partial_std_error,
        n_tasks: mc.n_tasks,
        n_test: mc.n_test,
        skipped_fraction: 0.0,
    });
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::new(
                "dp-release-breaches-imitation",
                report.dp_release_breaches_imitation,
                format!("decreasing {}, final {}", report.dp_release.strictly_decreasing, format_f64(report.dp_release.final_rho())),
            ),
            Assertion::new(
                "partial-release-preserves-imitation",
                report.partial_release_preserves_imitation,
                format!("{} >= {}", format_f64(report.partial_release.rho_partial), params.rho_floor),
            ),
            Assertion::new("rho-none-is-one", report.partial_release.rho_none == 1.0, format_f64(report.partial_release.rho_none)),
        ],
        traces: vec![Trace { file: "dp_curve.csv".into(), content: report.dp_release.curve_csv() }],
        results: json!({ "report": report, "partial_population_rho": population }),
        estimates,
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EpsDeltaParams {
    eps: f64,
    delta: f64,
    trials: usize,
    sigma: f64,
    expected: Verdict,
}

impl Default for EpsDeltaParams {
    fn default() -> Self {
        Self { eps: 0.1, delta: 0.1, trials: 5, sigma: 0.1, expected: Verdict::Breached }
    }
}

fn eps_delta_privacy(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: EpsDeltaParams = cfg.params()?;
    let data = synth_dataset(&cfg.dataset, cfg.seed)?;
    let module = Module::new(Learner::ols(), data.x_b.clone());
    let zero = ConstantBuilder { name: "zero".into(), imitation: ZeroImitation { dim: module.dim() } };
    let rotation = RotationAttackBuilder { sigma: params.sigma };
    let family: Vec<&dyn ImitationBuilder> = vec![&zero, &rotation];
    let features = FeatureSampler::StandardNormal { dim: module.dim() };
    let settings = RhoSettings {
        task_sampler: TaskSampler::linear(features.clone(), CoefficientPrior::StandardNormal, params.sigma),
        test_sampler: TestSampler::new(features),
        loss: cfg.loss,
        n_tasks: cfg.monte_carlo.n_tasks,
        n_test: cfg.monte_carlo.n_test,
    };
    let report = check_eps_delta(&module, &family, params.eps, params.delta, params.trials, &settings, rng::derive_seed(cfg.seed, "eps-delta", 0))?;
    Ok(ScenarioOutput {
        assertions: vec![Assertion::new(
            "verdict",
            report.verdict == params.expected,
            format!("{:?} (breach probability {})", report.verdict, format_f64(report.breach_probability)),
        )],
        results: serde_json::to_value(&report).map_err(|e| HarnessError::Report(e.to_string()))?,
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CoverParams {
    low: f64,
    high: f64,
    points: usize,
    epsilon: f64,
    sigma: f64,
    trials: usize,
    threshold: f64,
    min_pass: usize,
    concentration_sds: f64,
}

impl Default for CoverParams {
    fn default() -> Self {
        Self { low: -1.0, high: 1.0, points: 21, epsilon: 0.1, sigma: 0.2, trials: 100, threshold: 0.15, min_pass: 95, concentration_sds: 3.0 }
    }
}

/// Outcome of one epsilon-cover trial.
#[derive(Debug, Clone, Serialize)]
pub struct CoverTrial {
    pub rho_hat: f64,
    pub statistic: f64,
    pub statistic_mean: f64,
    pub statistic_sd: f64,
    pub matched_slope: f64,
    pub true_slope: f64,
}

/// One dictionary attack on fresh data, then one fresh task matched
/// against the dictionary.
pub fn cover_trial(spec: &CoverSpec, n: usize, loss: LossFn, n_tasks: usize, n_test: usize, seed: u64) -> Result<(CoverTrial, AttackRecord), HarnessError> {
    let x = spec.features.sample(n, &mut rng::stream(seed, "cover-data", 0))?;
    let module = Module::new(Learner::ols(), x);
    let mut view = ApiView::service("bob", module.clone(), ResponseMode::Residual)?.with_task_oracle();
    let start = Instant::now();
    let system = epsilon_cover_imitate(spec, &mut view, rng::derive_seed(seed, "cover-attack", 0))?;
    let tasks = TaskSampler::linear(spec.features.clone(), CoefficientPrior::Uniform { low: spec.low, high: spec.high }, spec.sigma);
    let est = estimate_rho(&module, &system, &tasks, &TestSampler::new(spec.features.clone()), loss, n_tasks, n_test, rng::derive_seed(seed, "cover-rho", 0))?;
    let star = tasks.labels_for(module.data(), &mut rng::stream(seed, "cover-star", 0))?;
    let (j, _) = system.nearest_entry(&star.labels).ok_or(AttackError::EmptyDictionary)?;
    let HackingAlgorithm::Dictionary { entries } = &system.algorithm else {
        return Err(AttackError::EmptyDictionary.into());
    };
    let statistic = matching_statistic(&entries[j].labels, &star.labels)?;
    let d = spec.grid[j] - star.beta[0];
    let mean = 2.0 * spec.sigma * spec.sigma + d * d * spec.second_moment();
    let trial = CoverTrial {
        rho_hat: est.rho_hat,
        statistic,
        statistic_mean: mean,
        statistic_sd: mean * (2.0 / n as f64).sqrt(),
        matched_slope: spec.grid[j],
        true_slope: star.beta[0],
    };
    Ok((trial, record(&system, "bob", Some(est.rho_hat), start)))
}

fn epsilon_cover(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: CoverParams = cfg.params()?;
    if cfg.dataset.p_a + cfg.dataset.p_b != 1 {
        return Err(invalid("dataset.p_b", "the slope family has one feature"));
    }
    let spec = CoverSpec::linear_grid(params.low, params.high, params.points, params.epsilon, params.sigma, feature_law(&cfg.dataset)?)?;
    let sampled_radius = spec.verify_radius(1000, 20_000, rng::derive_seed(cfg.seed, "cover-radius", 0))?;
    let mc = cfg.monte_carlo;
    let trials = (0..params.trials)
        .into_par_iter()
        .map(|t| cover_trial(&spec, cfg.dataset.n, cfg.loss, mc.n_tasks, mc.n_test, rng::derive_seed(cfg.seed, "cover-trial", t as u64)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let below = trials.iter().filter(|t| t.0.rho_hat <= params.threshold).count();
    let concentrated = trials.iter().filter(|t| (t.0.statistic - t.0.statistic_mean).abs() <= params.concentration_sds * t.0.statistic_sd).count();
    let rows = trials.iter().enumerate().map(|(i, (t, _))| {
        vec![i.to_string(), format_f64(t.rho_hat), format_f64(t.statistic), format_f64(t.statistic_mean), format_f64(t.statistic_sd)]
    });
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::at_most("sampled-cover-radius", sampled_radius, params.epsilon),
            Assertion::new("rho-below-threshold", below >= params.min_pass, format!("{below}/{} trials <= {}", params.trials, params.threshold)),
            Assertion::new(
                "matching-statistic-concentrates",
                concentrated >= params.min_pass,
                format!("{concentrated}/{} within {} sds", params.trials, params.concentration_sds),
            ),
        ],
        traces: vec![Trace { file: "cover_trials.csv".into(), content: csv("trial,rho_hat,statistic,statistic_mean,statistic_sd", rows) }],
        results: json!({
            "loss": cfg.loss.id(),
            "grid_points": spec.grid.len(),
            "radius": spec.radius(),
            "sampled_radius": sampled_radius,
            "log_cover_size": spec.log_cover_size(),
            "trials_below_threshold": below,
            "trials_concentrated": concentrated,
            "max_rho_hat": trials.iter().map(|t| t.0.rho_hat).fold(0.0, f64::max),
        }),
        attack_records: trials.into_iter().map(|t| t.1).collect(),
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BoundaryParams {
    weights: Vec<f64>,
    offset: f64,
    tol: f64,
    probes: usize,
    max_angle: f64,
    max_disagreement: f64,
    query_slack: usize,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        Self { weights: vec![1.0, -0.5], offset: 0.3, tol: 1e-9, probes: 100_000, max_angle: 1e-3, max_disagreement: 1e-3, query_slack: 2 }
    }
}

fn classifier_fn(c: LinearClassifier) -> PredictionFn {
    let p = c.dim();
    PredictionFn::new(FittedModel::Classifier(c), p, Provenance::note("classifier", "target"))
}

fn box_probes(lower: &[f64], upper: &[f64], n: usize, seed: u64) -> Result<DataMatrix, HarnessError> {
    Ok(FeatureSampler::UniformBox { lower: lower.to_vec(), upper: upper.to_vec() }.sample(n, &mut rng::stream(seed, "probes", 0))?)
}

fn boundary_extraction(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: BoundaryParams = cfg.params()?;
    let target = LinearClassifier::new(params.weights.clone(), params.offset)?;
    let f = classifier_fn(target.clone());
    let p = target.dim();
    let mut view = ApiView::predictor("classifier", f.clone(), ResponseMode::Label)?;
    let bcfg = BoundaryConfig { tol: params.tol, ..BoundaryConfig::new(p) };
    let start = Instant::now();
    let r = boundary_extract(&mut view, &bcfg, rng::derive_seed(cfg.seed, "boundary", 0))?;
    let cos = linalg::dot(&r.classifier.unit_normal(), &target.unit_normal()).clamp(-1.0, 1.0);
    let angle = cos.acos();
    let probes = box_probes(&bcfg.lower, &bcfg.upper, params.probes, rng::derive_seed(cfg.seed, "boundary-probes", 0))?;
    let dis = disagreement(&classifier_fn(r.classifier.clone()), &f, &probes)?;
    let worst_gap = r
        .queries_per_point
        .iter()
        .zip(&r.chord_lengths)
        .map(|(&q, &c)| q.abs_diff(bisection_queries(c, params.tol)))
        .max()
        .unwrap_or(0);
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::at_most("direction-angle", angle, params.max_angle),
            Assertion::at_most("probe-disagreement", dis, params.max_disagreement),
            Assertion::new("bisection-query-count", worst_gap <= params.query_slack, format!("largest deviation {worst_gap}")),
        ],
        attack_records: vec![record(&r.system, "classifier", None, start)],
        results: json!({
            "angle": angle,
            "disagreement": dis,
            "queries": r.queries,
            "recovered_weights": r.classifier.weights(),
            "recovered_offset": r.classifier.offset(),
        }),
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RetrainParams {
    weights: Vec<f64>,
    offset: f64,
    budget: usize,
    batch: usize,
    trials: usize,
    probes: usize,
    min_wins: usize,
}

impl Default for RetrainParams {
    fn default() -> Self {
        Self { weights: vec![1.0, 2.0], offset: -1.5, budget: 100, batch: 10, trials: 10, probes: 10_000, min_wins: 8 }
    }
}

fn adaptive_retraining(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: RetrainParams = cfg.params()?;
    let f = classifier_fn(LinearClassifier::new(params.weights.clone(), params.offset)?);
    let p = f.input_dim();
    let rcfg = RetrainConfig::new(p, params.budget, params.batch);
    let probes = box_probes(&rcfg.lower, &rcfg.upper, params.probes, rng::derive_seed(cfg.seed, "retrain-probes", 0))?;
    let mut out = ScenarioOutput::default();
    let mut wins = 0;
    let mut finals = Vec::new();
    for t in 0..params.trials {
        let seed = rng::derive_seed(cfg.seed, "retrain-trial", t as u64);
        let mut va = ApiView::predictor("classifier", f.clone(), ResponseMode::Label)?;
        let start = Instant::now();
        let adaptive = adaptive_retrain(&mut va, &rcfg, seed)?;
        out.attack_records.push(record(&adaptive.system, "classifier", None, start));
        let mut vr = ApiView::predictor("classifier", f.clone(), ResponseMode::Label)?;
        let random = random_retrain(&mut vr, &rcfg, seed)?;
        let curve = learning_curve(&adaptive, &f, &probes)?;
        let ra = curve.last().map_or(1.0, |c| c.1);
        let rr = disagreement(&random.snapshots.last().expect("one snapshot").1, &f, &probes)?;
        if ra <= rr {
            wins += 1;
        }
        finals.push(json!({"adaptive": ra, "random": rr}));
        if t == 0 {
            out.traces.push(Trace {
                file: "learning_curve.csv".into(),
                content: csv("queries,disagreement", curve.iter().map(|(q, d)| vec![q.to_string(), format_f64(*d)])),
            });
        }
    }
    out.assertions.push(Assertion::new("adaptive-beats-random", wins >= params.min_wins, format!("{wins}/{}", params.trials)));
    out.results = json!({ "wins": wins, "final_disagreement": finals });
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PathParams {
    max_depth: usize,
    min_leaf: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    grid: usize,
    delta_split: f64,
}

impl Default for PathParams {
    fn default() -> Self {
        Self { max_depth: 3, min_leaf: 5, lower: vec![-10.0, -10.0], upper: vec![10.0, 10.0], grid: 100, delta_split: 1e-6 }
    }
}

fn path_finding(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: PathParams = cfg.params()?;
    if params.lower.len() != 2 || params.upper.len() != 2 || params.grid == 0 {
        return Err(invalid("params", "path-finding probes a two-feature box on a positive grid"));
    }
    let x = box_probes(&params.lower, &params.upper, cfg.dataset.n, rng::derive_seed(cfg.seed, "tree-data", 0))?;
    let y = LabelVector::regression(x.row_iter().map(|r| (r[0] * 0.4).sin() + 0.1 * r[1] * r[1]).collect())?;
    let tree = Learner::tree(params.max_depth, params.min_leaf).fit(&x, &y, 0)?;
    let mut view = ApiView::predictor("tree", tree.clone(), ResponseMode::LeafId)?;
    let pcfg = PathFindingConfig { delta_split: params.delta_split, ..PathFindingConfig::new(params.lower.clone(), params.upper.clone()) };
    let start = Instant::now();
    let part = path_finding_extract(&mut view, &pcfg)?;
    let g = params.grid;
    let mut agree = 0;
    for i in 0..g {
        for j in 0..g {
            let at = |k: usize, idx: usize| params.lower[k] + (params.upper[k] - params.lower[k]) * (idx as f64 + 0.5) / g as f64;
            let probe = [at(0, i), at(1, j)];
            if part.classify(&probe) == tree.leaf_id(&probe)? {
                agree += 1;
            }
        }
    }
    let fraction = agree as f64 / (g * g) as f64;
    let system = ImitationSystem {
        attack: "path-finding".into(),
        information: view.information().clone(),
        queries_used: view.queries_used(),
        algorithm: HackingAlgorithm::Fixed { function: PredictionFn::zero(2) },
    };
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::new("complete", part.complete, format!("coverage {}", format_f64(part.coverage))),
            Assertion::new("grid-agreement", agree == g * g, format!("{agree}/{}", g * g)),
        ],
        attack_records: vec![record(&system, "tree", None, start)],
        results: json!({ "cells": part.cells, "queries": part.queries, "agreement": fraction }),
        ..Default::default()
    })
}

/// Values the tamper audit compares, as bit patterns.
fn bits(values: impl IntoIterator<Item = f64>) -> Vec<u64> {
    values.into_iter().map(f64::to_bits).collect()
}

type AuditRun = Box<dyn Fn(&mut dyn Oracle) -> Result<Vec<u64>, AttackError>>;
type AuditTamper = Box<dyn Fn(&mut ApiView) -> Result<(), AttackError>>;

struct AuditCase {
    name: &'static str,
    view: ApiView,
    run: AuditRun,
    tamper: AuditTamper,
}

fn audit_cases(seed: u64) -> Result<Vec<AuditCase>, HarnessError> {
    let mut cases = Vec::new();

    let target = logistic_target(3, seed, 0);
    cases.push(AuditCase {
        name: "equation-solving",
        view: ApiView::predictor("logistic", logistic_fn(target), ResponseMode::Probability)?,
        run: Box::new(move |o| {
            let r = equation_solving_extract(o, 3, seed)?;
            Ok(bits(r.model.weights.iter().copied().chain([r.model.bias])))
        }),
        tamper: Box::new(move |v| {
            v.replace_target(Target::Predictor(Arc::new(logistic_fn(logistic_target(3, seed, 1)))));
            Ok(())
        }),
    });

    let clf = LinearClassifier::new(vec![1.0, -0.5], 0.3)?;
    cases.push(AuditCase {
        name: "boundary-extraction",
        view: ApiView::predictor("classifier", classifier_fn(clf), ResponseMode::Label)?,
        run: Box::new(move |o| {
            let r = boundary_extract(o, &BoundaryConfig::new(2), seed)?;
            Ok(bits(r.classifier.weights().iter().copied().chain([r.classifier.offset()]).chain(r.boundary_points.concat())))
        }),
        tamper: Box::new(|v| {
            v.replace_target(Target::Predictor(Arc::new(classifier_fn(LinearClassifier::new(vec![0.2, 1.0], -1.0)?))));
            Ok(())
        }),
    });

    let x = box_probes(&[-10.0, -10.0], &[10.0, 10.0], 200, rng::derive_seed(seed, "audit-tree", 0))?;
    let y = LabelVector::regression(x.row_iter().map(|r| r[0] + r[1] * r[1] * 0.1).collect())?;
    let tree = Learner::tree(3, 5).fit(&x, &y, 0)?;
    let other = Learner::tree(2, 5).fit(&x.map(|v| v * 0.5)?, &y, 0)?;
    cases.push(AuditCase {
        name: "path-finding",
        view: ApiView::predictor("tree", tree, ResponseMode::LeafId)?,
        run: Box::new(|o| {
            let r = path_finding_extract(o, &PathFindingConfig::new(vec![-10.0; 2], vec![10.0; 2]))?;
            Ok(bits(r.cells.iter().flat_map(|c| c.lower.iter().chain(&c.upper).copied().collect::<Vec<_>>())))
        }),
        tamper: Box::new(move |v| {
            v.replace_target(Target::Predictor(Arc::new(other.clone())));
            Ok(())
        }),
    });

    let xb = FeatureSampler::StandardNormal { dim: 3 }.sample(60, &mut rng::stream(seed, "audit-span", 0))?;
    cases.push(AuditCase {
        name: "column-space-recovery",
        view: ApiView::service("bob", Module::new(Learner::ols(), xb), ResponseMode::Residual)?,
        run: Box::new(move |o| Ok(bits(recover_column_space(o, 3, 3, seed)?.basis.iter().copied()))),
        tamper: Box::new(|v| v.tamper_data(|d| d.map(|x| x * 1.5 + 0.25).expect("finite"))),
    });

    let xr = FeatureSampler::StandardNormal { dim: 2 }.sample(400, &mut rng::stream(seed, "audit-rotation", 0))?;
    cases.push(AuditCase {
        name: "covariance-rotation",
        view: ApiView::service("bob", Module::new(Learner::ols(), xr), ResponseMode::Residual)?.with_task_oracle(),
        run: Box::new(move |o| {
            let a = covariance_rotation_attack(o, 2, 0.1, seed)?;
            Ok(bits(a.solution.reconstruction.matrix().iter().copied()))
        }),
        tamper: Box::new(|v| v.tamper_data(|d| d.map(|x| -x + 0.1).expect("finite"))),
    });

    let xs = FeatureSampler::StandardNormal { dim: 1 }.sample(8, &mut rng::stream(seed, "audit-order", 0))?;
    cases.push(AuditCase {
        name: "tree-structure-end-to-end",
        view: ApiView::service("stump", Module::new(Learner::tree(1, 1), xs), ResponseMode::Fitted)?,
        run: Box::new(|o| {
            let order = basis_order(o, 8)?;
            Ok(order.into_iter().map(|i| i as u64).collect())
        }),
        tamper: Box::new(|v| v.tamper_data(|d| d.map(|x| -x * x).expect("finite"))),
    });

    let cover = CoverSpec::linear_grid(-1.0, 1.0, 21, 0.1, 0.2, FeatureSampler::StandardNormal { dim: 1 })?;
    let xc = cover.features.sample(100, &mut rng::stream(seed, "audit-cover", 0))?;
    cases.push(AuditCase {
        name: "epsilon-cover",
        view: ApiView::service("bob", Module::new(Learner::ols(), xc), ResponseMode::Residual)?.with_task_oracle(),
        run: Box::new(move |o| {
            let s = epsilon_cover_imitate(&cover, o, seed)?;
            let HackingAlgorithm::Dictionary { entries } = &s.algorithm else { return Err(AttackError::EmptyDictionary) };
            let probe = [0.7];
            let mut out = Vec::new();
            for e in entries {
                out.extend(e.labels.values().iter().copied());
                out.push(e.stage_two.evaluate(&probe)?);
            }
            Ok(bits(out))
        }),
        tamper: Box::new(|v| v.tamper_data(|d| d.map(|x| x + 3.0).expect("finite"))),
    });
    Ok(cases)
}

/// Order recovered by sending `e_1 .. e_n` to a fitted-mode tree service.
fn basis_order(oracle: &mut dyn Oracle, n: usize) -> Result<Vec<usize>, AttackError> {
    let mut responses = Vec::with_capacity(n);
    for i in 0..n {
        responses.push(oracle.query_labels(&LabelVector::basis(n, i, 1.0)?)?.values);
    }
    Ok(tree_structure_recover(&responses)?.order)
}

/// Outcome of one tamper-audit case.
#[derive(Debug, Clone, Serialize)]
pub struct AuditOutcome {
    pub attack: String,
    pub queries: usize,
    /// Replaying the frozen log after tampering gives the same output.
    pub replay_identical: bool,
    /// A live rerun after tampering sees a different target.
    pub tamper_visible: bool,
}

pub fn tamper_audit_outcomes(seed: u64) -> Result<Vec<AuditOutcome>, HarnessError> {
    let mut outcomes = Vec::new();
    for mut case in audit_cases(seed)? {
        let before = (case.run)(&mut case.view)?;
        let mut replay: LogReplay = case.view.freeze();
        (case.tamper)(&mut case.view)?;
        let replayed = (case.run)(&mut replay)?;
        let mut fresh = case.view.clone();
        let live = (case.run)(&mut fresh).ok();
        outcomes.push(AuditOutcome {
            attack: case.name.into(),
            queries: replay.queries_used(),
            replay_identical: replayed == before,
            tamper_visible: live.as_ref() != Some(&before),
        });
    }
    Ok(outcomes)
}

fn tamper_audit(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let _: NoParams = cfg.params()?;
    let outcomes = tamper_audit_outcomes(cfg.seed)?;
    let assertions = outcomes
        .iter()
        .flat_map(|o| {
            [
                Assertion::new(&format!("{}-replay-identical", o.attack), o.replay_identical, format!("{} logged queries", o.queries)),
                Assertion::new(&format!("{}-tamper-visible", o.attack), o.tamper_visible, "live rerun differs"),
            ]
        })
        .collect();
    Ok(ScenarioOutput { assertions, results: json!({ "cases": outcomes }), ..Default::default() })
}

/// The worked six-row table: responses of a tree service to `e_1 .. e_6`
/// on rows with feature values `[7, 1, 10, 5, 18, 9]`.
pub fn worked_table() -> (Vec<f64>, Vec<Vec<f64>>) {
    let t = 1.0 / 3.0;
    let h = 0.5;
    let rows = vec![
        vec![t, t, 0.0, t, 0.0, 0.0],
        vec![0.0; 6],
        vec![0.0, 0.0, h, 0.0, h, 0.0],
        vec![0.0, h, 0.0, h, 0.0, 0.0],
        vec![0.0; 6],
        vec![0.0, 0.0, t, 0.0, t, t],
    ];
    (vec![7.0, 1.0, 10.0, 5.0, 18.0, 9.0], rows)
}

fn tree_structure_paper_table(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let _: NoParams = cfg.params()?;
    let (values, rows) = worked_table();
    let rec = tree_structure_recover(&rows)?;
    let expected = vec![1, 3, 0, 5, 2, 4];
    let reversed: Vec<usize> = expected.iter().rev().copied().collect();
    let names: Vec<String> = rec.order.iter().map(|i| format!("x{}", i + 1)).collect();
    let sorted: Vec<f64> = rec.order.iter().map(|&i| values[i]).collect();
    Ok(ScenarioOutput {
        assertions: vec![
            Assertion::new("order-matches", rec.order == expected || rec.order == reversed, names.join(",")),
            Assertion::new("reflection-flagged", rec.reflection_ambiguous, "order identified up to reversal"),
        ],
        results: json!({ "order": names, "values_in_order": sorted, "recovery": rec }),
        ..Default::default()
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EndToEndParams {
    trials: usize,
}

impl Default for EndToEndParams {
    fn default() -> Self {
        Self { trials: 20 }
    }
}

fn tree_structure_end_to_end(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let params: EndToEndParams = cfg.params()?;
    let n = cfg.dataset.n;
    let law = feature_law(&cfg.dataset)?;
    if law.dim() != 1 {
        return Err(invalid("dataset.p_b", "order recovery runs on one feature"));
    }
    let mut matched = 0;
    let mut out = ScenarioOutput::default();
    let mut rows = Vec::new();
    for t in 0..params.trials {
        let x = law.sample(n, &mut rng::stream(cfg.seed, "order-data", t as u64))?;
        let mut view = ApiView::service("stump", Module::new(Learner::tree(1, 1), x.clone()), ResponseMode::Fitted)?;
        let start = Instant::now();
        let order = basis_order(&mut view, n)?;
        let col = x.column(0);
        let mut sorted: Vec<usize> = (0..n).collect();
        sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let reversed: Vec<usize> = sorted.iter().rev().copied().collect();
        let ok = order == sorted || order == reversed;
        matched += usize::from(ok);
        let system = ImitationSystem {
            attack: "tree-structure".into(),
            information: view.information().clone(),
            queries_used: view.queries_used(),
            algorithm: HackingAlgorithm::Fixed { function: PredictionFn::zero(1) },
        };
        out.attack_records.push(record(&system, "stump", None, start));
        rows.push(json!({ "order": order, "matches_sort": ok }));
    }
    out.assertions.push(Assertion::new("order-matches-sort", matched == params.trials, format!("{matched}/{}", params.trials)));
    out.results = json!({ "trials": rows });
    Ok(out)
}

pub(crate) fn default_dataset(name: &str) -> super::DatasetSpec {
    use super::{CovarianceSpec, DatasetSpec};
    let base = DatasetSpec { n: 200, p_a: 0, p_b: 3, covariance: CovarianceSpec::Identity, noise_sigma: 0.1, bound: None, beta: None };
    match name {
        "assisted-oracle-convergence" => DatasetSpec {
            n: 500,
            p_a: 3,
            p_b: 3,
            covariance: CovarianceSpec::Equicorrelated { rho: 0.5 },
            noise_sigma: 1.0,
            beta: Some(vec![1.0, -1.0, 0.5, 2.0, 0.3, -0.7]),
            ..base
        },
        "column-space-recovery" => DatasetSpec { n: 50, ..base },
        "dp-bias-correction" | "dp-non-implication" => DatasetSpec { n: 1000, p_b: 2, bound: Some(1.0), beta: Some(vec![1.0, 1.0]), ..base },
        "eps-delta-privacy" => DatasetSpec { n: 2000, ..base },
        "epsilon-cover" => DatasetSpec { n: 5000, p_b: 1, noise_sigma: 0.2, ..base },
        "tree-structure-end-to-end" => DatasetSpec { n: 8, p_b: 1, ..base },
        _ => base,
    }
}

/// Bundled default configuration of a registered scenario.
pub fn default_config(name: &str) -> Option<ExperimentConfig> {
    let info = REGISTRY.iter().find(|s| s.name == name)?;
    let (loss, n_tasks, n_test) = match info.name {
        "covariance-rotation-trend" | "dp-non-implication" | "eps-delta-privacy" => (LossFn::RelativeL2, 20, 2000),
        "epsilon-cover" => (LossFn::Squared, 10, 1000),
        _ => (LossFn::ScaledL2, 50, 1000),
    };
    Some(ExperimentConfig {
        experiment_id: info.name.into(),
        scenario: info.name.into(),
        seed: 20_240_601,
        dataset: default_dataset(info.name),
        loss,
        monte_carlo: super::MonteCarlo { n_tasks, n_test },
        params: json!({}),
        output_dir: None,
    })
}

