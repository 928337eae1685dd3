//! Laplace mechanism, bias-corrected regression on privatized features, and
//! the two experiments showing that differential privacy and imitation
//! privacy do not imply each other.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::learners::{fit_ols, OlsModel};
use crate::model::{DataMatrix, FittedModel, LabelVector, Learner, LossFn, Module, ModelError, PredictionFn, Provenance};
use crate::privacy::{estimate_rho, format_f64, FeatureSampler, Imitation, PrivacyError, PrivacyEstimate, TaskSampler, TestSampler, ZeroImitation};
use crate::rng;

const MAX_LISTED: usize = 20;

#[derive(Debug, Error)]
pub enum DpError {
    #[error("{count} entries outside [-{bound}, {bound}], first: {entries:?}")]
    BoundViolation { bound: f64, count: usize, entries: Vec<(usize, usize, f64)> },
    #[error("invalid mechanism parameters: {0}")]
    InvalidParams(String),
    #[error("corrected Gram matrix not positive definite at n = {n} (smallest eigenvalue {min_eigenvalue:e}); use more rows")]
    NotIdentifiable { n: usize, min_eigenvalue: f64 },
    #[error("invalid release: {0}")]
    InvalidRelease(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
}

/// Entries bounded by `b`, privacy level `alpha` (may be infinite).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceParams {
    b: f64,
    alpha: f64,
}

impl LaplaceParams {
    pub fn new(b: f64, alpha: f64) -> Result<Self, DpError> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(DpError::InvalidParams(format!("bound b = {b}")));
        }
        if !(alpha > 0.0) {
            return Err(DpError::InvalidParams(format!("alpha = {alpha}")));
        }
        Ok(Self { b, alpha })
    }

    pub fn bound(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Per-entry Laplace scale `2b / alpha`.
    pub fn scale(&self) -> f64 {
        2.0 * self.b / self.alpha
    }

    /// Per-entry noise variance `tau^2 = 8 b^2 / alpha^2`.
    pub fn variance(&self) -> f64 {
        8.0 * self.b * self.b / (self.alpha * self.alpha)
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        sign * e * self.scale()
    }
}

/// Locally privatized copy of a feature matrix.
#[derive(Debug, Clone)]
pub struct PrivatizedData {
    pub data: DataMatrix,
    pub params: LaplaceParams,
    pub seed: u64,
}

impl PrivatizedData {
    pub fn rows(&self) -> usize {
        self.data.rows()
    }
}

pub fn laplace_mechanism(x: &DataMatrix, params: LaplaceParams, seed: u64) -> Result<PrivatizedData, DpError> {
    let m = x.matrix();
    let mut entries = Vec::new();
    let mut count = 0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)].abs() > params.b {
                count += 1;
                if entries.len() < MAX_LISTED {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
    }
    if count > 0 {
        return Err(DpError::BoundViolation { bound: params.b, count, entries });
    }
    let mut r = rng::stream(seed, "laplace", 0);
    let noisy = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] + params.sample_noise(&mut r));
    Ok(PrivatizedData { data: DataMatrix::new(noisy)?, params, seed })
}

/// `(X~^T X~ / n - tau^2 I)^{-1} (X~^T y / n)`.
pub fn bias_corrected_fit(released: &PrivatizedData, y: &LabelVector) -> Result<OlsModel, DpError> {
    let x = released.data.matrix();
    let n = x.nrows();
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { context: "bias-corrected labels", expected: n, actual: y.len() }.into());
    }
    let p = x.ncols();
    let tau2 = released.params.variance();
    let gram = x.transpose() * x / n as f64 - DMatrix::identity(p, p) * tau2;
    let rhs = x.transpose() * y.to_dvector() / n as f64;
    let min_eigenvalue = gram.clone().symmetric_eigen().eigenvalues.min();
    let chol = match gram.cholesky() {
        Some(c) if min_eigenvalue > 0.0 => c,
        _ => return Err(DpError::NotIdentifiable { n, min_eigenvalue }),
    };
    let beta: DVector<f64> = chol.solve(&rhs);
    Ok(OlsModel { coefficients: beta.iter().copied().collect(), intercept: None, rank: p, rank_deficient: false })
}

/// Ordinary least squares on the noisy features, ignoring the noise.
pub fn naive_fit(released: &PrivatizedData, y: &LabelVector) -> Result<OlsModel, DpError> {
    Ok(fit_ols(&released.data, y)?)
}

/// Imitates an OLS module from its Laplace-released features.
#[derive(Debug, Clone)]
pub struct BiasCorrectedImitation {
    pub released: PrivatizedData,
}

impl Imitation for BiasCorrectedImitation {
    fn imitate(&self, y: &LabelVector) -> Result<PredictionFn, ModelError> {
        let model = bias_corrected_fit(&self.released, y)
            .map_err(|e| ModelError::FitFailure { learner: "bias-corrected".into(), cause: e.to_string() })?;
        let p = model.coefficients.len();
        let provenance = Provenance {
            learner: "bias-corrected".into(),
            data: Some(format!("{:016x}", self.released.data.fingerprint())),
            labels: Some(format!("{:016x}", y.fingerprint())),
            note: Some(format!("tau^2 = {}", self.released.params.variance())),
        };
        Ok(PredictionFn::new(FittedModel::Ols(model), p, provenance))
    }
}

/// Fits the module's own learner on a published subset of its columns.
#[derive(Debug, Clone)]
pub struct ColumnImitation {
    learner: Learner,
    columns: Vec<usize>,
    released: DataMatrix,
    input_dim: usize,
}

impl Imitation for ColumnImitation {
    fn imitate(&self, y: &LabelVector) -> Result<PredictionFn, ModelError> {
        let inner = self.learner.fit(&self.released, y, 0)?;
        let provenance = Provenance::note(self.learner.id(), format!("released columns {:?}", self.columns));
        Ok(PredictionFn::new(
            FittedModel::ColumnSubset { columns: self.columns.clone(), inner: Box::new(inner) },
            self.input_dim,
            provenance,
        ))
    }
}

/// Same-learner imitation from any set of released columns. An empty set
/// gives the zero imitation.
pub fn released_columns_imitation(module: &Module, columns: &[usize]) -> Result<Box<dyn Imitation>, DpError> {
    let p = module.dim();
    if columns.is_empty() {
        return Ok(Box::new(ZeroImitation { dim: p }));
    }
    let mut sorted = columns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != columns.len() {
        return Err(DpError::InvalidRelease(format!("duplicate columns in {columns:?}")));
    }
    let released = module.data().select_columns(&sorted)?;
    Ok(Box::new(ColumnImitation { learner: module.learner().clone(), columns: sorted, released, input_dim: p }))
}

/// Settings shared by the privacy measurements in this module.
#[derive(Debug, Clone)]
pub struct MeasureSettings {
    pub loss: LossFn,
    pub n_tasks: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub rho_hat: f64,
    pub std_error: f64,
}

/// `rho_hat` against `n` for the bias-corrected imitation of an OLS module
/// whose features are uniform on `[-b, b]^p` and released through the
/// Laplace mechanism. Each point averages `replicates` independent
/// (data, release) draws; `std_error` is taken across those replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpBreachReport {
    pub params: LaplaceParams,
    pub replicates: usize,
    pub curve: Vec<CurvePoint>,
    pub strictly_decreasing: bool,
}

impl DpBreachReport {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("n,rho_hat,std_error\n");
        for c in &self.curve {
            out.push_str(&format!("{},{},{}\n", c.n, format_f64(c.rho_hat), format_f64(c.std_error)));
        }
        out
    }

    pub fn final_rho(&self) -> f64 {
        self.curve.last().map_or(f64::NAN, |c| c.rho_hat)
    }
}

pub fn bounded_features(p: usize, b: f64) -> FeatureSampler {
    FeatureSampler::UniformBox { lower: vec![-b; p], upper: vec![b; p] }
}

pub fn dp_breach_experiment(
    params: LaplaceParams,
    p: usize,
    n_grid: &[usize],
    replicates: usize,
    task_sampler: &TaskSampler,
    settings: &MeasureSettings,
    seed: u64,
) -> Result<DpBreachReport, DpError> {
    if n_grid.is_empty() || replicates == 0 {
        return Err(DpError::InvalidParams("need a nonempty n grid and at least one replicate".into()));
    }
    let features = bounded_features(p, params.b);
    let test = TestSampler::new(features.clone());
    let jobs: Vec<(usize, usize)> = (0..n_grid.len()).flat_map(|k| (0..replicates).map(move |r| (k, r))).collect();
    let rhos = jobs
        .par_iter()
        .map(|&(k, r)| {
            let idx = (k * replicates + r) as u64;
            let x = features.sample(n_grid[k], &mut rng::stream(seed, "dp-data", idx))?;
            let bob = Module::new(Learner::ols(), x);
            let released = laplace_mechanism(bob.data(), params, rng::derive_seed(seed, "dp-release", idx))?;
            let imitation = BiasCorrectedImitation { released };
            let est = estimate_rho(
                &bob,
                &imitation,
                task_sampler,
                &test,
                settings.loss,
                settings.n_tasks,
                settings.n_test,
                rng::derive_seed(seed, "dp-rho", idx),
            )?;
            Ok(est.rho_hat)
        })
        .collect::<Result<Vec<f64>, DpError>>()?;
    let curve: Vec<CurvePoint> = rhos
        .chunks(replicates)
        .zip(n_grid)
        .map(|(chunk, &n)| {
            let m = chunk.len() as f64;
            let mean = chunk.iter().sum::<f64>() / m;
            let std_error = if chunk.len() > 1 {
                (chunk.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
            } else {
                0.0
            };
            CurvePoint { n, rho_hat: mean, std_error }
        })
        .collect();
    let strictly_decreasing = curve.windows(2).all(|w| w[1].rho_hat < w[0].rho_hat);
    Ok(DpBreachReport { params, replicates, curve, strictly_decreasing })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionPoint {
    pub n: usize,
    /// Root mean square over replicates of `||beta_a - beta_b||`.
    pub rms_corrected: f64,
    pub rms_naive: f64,
    /// Replicates where the corrected fit is strictly closer to clean OLS.
    pub corrected_wins: usize,
    pub replicates: usize,
}

/// Paired comparison of corrected and naive fits against OLS on the clean
/// features, `replicates` seeded datasets per `n`.
pub fn correction_error_curve(
    params: LaplaceParams,
    beta: &[f64],
    sigma: f64,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<CorrectionPoint>, DpError> {
    if replicates == 0 || n_grid.is_empty() || beta.is_empty() {
        return Err(DpError::InvalidParams("need replicates, an n grid and coefficients".into()));
    }
    let features = bounded_features(beta.len(), params.b);
    let sampler = TaskSampler::linear(features.clone(), crate::privacy::CoefficientPrior::Fixed { beta: beta.to_vec() }, sigma);
    n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let errors = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let idx = (k * replicates + r) as u64;
                    let x = features.sample(n, &mut rng::stream(seed, "correction-data", idx))?;
                    let task = sampler.labels_for(&x, &mut rng::stream(seed, "correction-task", idx))?;
                    let released = laplace_mechanism(&x, params, rng::derive_seed(seed, "correction-release", idx))?;
                    let clean = fit_ols(&x, &task.labels)?.coefficients;
                    let dist = |m: OlsModel| {
                        let d: Vec<f64> = m.coefficients.iter().zip(&clean).map(|(a, b)| a - b).collect();
                        crate::linalg::norm(&d)
                    };
                    let corrected = dist(bias_corrected_fit(&released, &task.labels)?);
                    let naive = dist(naive_fit(&released, &task.labels)?);
                    Ok((corrected, naive))
                })
                .collect::<Result<Vec<_>, DpError>>()?;
            let rms = |v: &mut dyn Iterator<Item = f64>| (v.map(|e| e * e).sum::<f64>() / replicates as f64).sqrt();
            Ok(CorrectionPoint {
                n,
                rms_corrected: rms(&mut errors.iter().map(|e| e.0)),
                rms_naive: rms(&mut errors.iter().map(|e| e.1)),
                corrected_wins: errors.iter().filter(|(c, u)| c < u).count(),
                replicates,
            })
        })
        .collect()
}

/// Least-squares slope of `log10(rms_corrected)` on `log10(n)`.
pub fn log_log_slope(points: &[CorrectionPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rms_corrected.log10()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialReleaseReport {
    pub released: Vec<usize>,
    pub rho_partial: f64,
    pub rho_partial_std_error: f64,
    pub rho_none: f64,
    pub rho_floor: f64,
    pub preserved: bool,
}

/// Measures how much publishing `released` columns of the module's data
/// helps an imitator that refits the module's learner on them, against the
/// no-information baseline.
pub fn partial_release_experiment(
    module: &Module,
    released: &[usize],
    task_sampler: &TaskSampler,
    test_sampler: &TestSampler,
    settings: &MeasureSettings,
    rho_floor: f64,
    seed: u64,
) -> Result<PartialReleaseReport, DpError> {
    let p = module.dim();
    if released.is_empty() {
        return Err(DpError::InvalidRelease("released set is empty".into()));
    }
    if let Some(&bad) = released.iter().find(|&&c| c >= p) {
        return Err(DpError::InvalidRelease(format!("column {bad} out of range for {p} features")));
    }
    let mut distinct = released.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() == p {
        return Err(DpError::InvalidRelease("every column released".into()));
    }
    let imitation = released_columns_imitation(module, released)?;
    let measure = |imitation: &dyn Imitation, role: &str| -> Result<PrivacyEstimate, DpError> {
        Ok(estimate_rho(
            module,
            imitation,
            task_sampler,
            test_sampler,
            settings.loss,
            settings.n_tasks,
            settings.n_test,
            rng::derive_seed(seed, role, 0),
        )?)
    };
    let partial = measure(imitation.as_ref(), "partial-release")?;
    let none = measure(&ZeroImitation { dim: p }, "no-release")?;
    Ok(PartialReleaseReport {
        released: released.to_vec(),
        rho_partial: partial.rho_hat,
        rho_partial_std_error: partial.std_error,
        rho_none: none.rho_hat,
        rho_floor,
        preserved: partial.rho_hat >= rho_floor,
    })
}

/// Population value of the relative-L2 imitation loss when the imitator
/// recovers the released part of a linear target exactly, for independent
/// zero-mean features with the given second moments.
pub fn partial_release_population_rho(beta: &[f64], released: &[usize], second_moments: &[f64]) -> f64 {
    let total: f64 = beta.iter().zip(second_moments).map(|(b, m)| b * b * m).sum();
    let hidden: f64 = beta
        .iter()
        .zip(second_moments)
        .enumerate()
        .filter(|(j, _)| !released.contains(j))
        .map(|(_, (b, m))| b * b * m)
        .sum();
    hidden / total
}

/// One run carrying both halves of the non-implication argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonImplicationReport {
    /// DP release whose imitation privacy vanishes.
    pub dp_release: DpBreachReport,
    pub dp_rho_threshold: f64,
    pub dp_release_breaches_imitation: bool,
    /// Non-private partial release whose imitation privacy stays high.
    pub partial_release: PartialReleaseReport,
    pub partial_release_preserves_imitation: bool,
}

impl NonImplicationReport {
    pub fn new(dp_release: DpBreachReport, dp_rho_threshold: f64, partial_release: PartialReleaseReport) -> Self {
        let dp_release_breaches_imitation = dp_release.strictly_decreasing && dp_release.final_rho() <= dp_rho_threshold;
        let partial_release_preserves_imitation = partial_release.preserved;
        Self { dp_release, dp_rho_threshold, dp_release_breaches_imitation, partial_release, partial_release_preserves_imitation }
    }

    pub fn both_hold(&self) -> bool {
        self.dp_release_breaches_imitation && self.partial_release_preserves_imitation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::CoefficientPrior;

    #[test]
    fn variance_formula_is_exact() {
        for (b, a) in [(1.0, 2.0), (0.3, 0.7), (5.0, 4.0), (1.0, 1.0)] {
            let p = LaplaceParams::new(b, a).unwrap();
            assert_eq!(p.variance(), 8.0 * b * b / (a * a));
        }
        let p = LaplaceParams::new(1.0, 2.0).unwrap();
        assert_eq!(p.scale(), 1.0);
        assert_eq!(p.variance(), 2.0);
        assert!(LaplaceParams::new(0.0, 1.0).is_err());
        assert!(LaplaceParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn empirical_noise_variance() {
        let p = LaplaceParams::new(1.0, 1.0).unwrap();
        let mut r = rng::stream(11, "laplace-variance", 0);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| p.sample_noise(&mut r)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((7.6..=8.4).contains(&var), "variance {var}");
    }

    #[test]
    fn infinite_alpha_releases_the_data() {
        let x = DataMatrix::from_rows(&[vec![0.5, -0.2], vec![1.0, 0.0]]).unwrap();
        let r = laplace_mechanism(&x, LaplaceParams::new(1.0, f64::INFINITY).unwrap(), 3).unwrap();
        assert_eq!(r.data, x);
    }

    #[test]
    fn bound_violations_are_listed() {
        let x = DataMatrix::from_rows(&[vec![0.5, 2.0], vec![-1.5, 0.0]]).unwrap();
        match laplace_mechanism(&x, LaplaceParams::new(1.0, 1.0).unwrap(), 0) {
            Err(DpError::BoundViolation { count, entries, .. }) => {
                assert_eq!(count, 2);
                assert_eq!(entries, vec![(0, 1, 2.0), (1, 0, -1.5)]);
            }
            other => panic!("expected bound violation, got {other:?}"),
        }
    }

    #[test]
    fn release_is_reproducible() {
        let x = bounded_features(2, 1.0).sample(50, &mut rng::stream(1, "x", 0)).unwrap();
        let p = LaplaceParams::new(1.0, 2.0).unwrap();
        assert_eq!(laplace_mechanism(&x, p, 9).unwrap().data, laplace_mechanism(&x, p, 9).unwrap().data);
        assert_ne!(laplace_mechanism(&x, p, 9).unwrap().data, laplace_mechanism(&x, p, 10).unwrap().data);
    }

    #[test]
    fn zero_correction_is_ols() {
        let x = bounded_features(2, 1.0).sample(200, &mut rng::stream(2, "x", 0)).unwrap();
        let y = LabelVector::regression(x.row_iter().map(|r| r[0] - 2.0 * r[1] + 0.1).collect()).unwrap();
        let released = laplace_mechanism(&x, LaplaceParams::new(1.0, f64::INFINITY).unwrap(), 0).unwrap();
        let a = bias_corrected_fit(&released, &y).unwrap().coefficients;
        let b = fit_ols(&x, &y).unwrap().coefficients;
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn small_sample_large_noise_is_not_identifiable() {
        let x = bounded_features(3, 1.0).sample(5, &mut rng::stream(3, "x", 0)).unwrap();
        let released = laplace_mechanism(&x, LaplaceParams::new(1.0, 0.05).unwrap(), 0).unwrap();
        let y = LabelVector::regression(vec![1.0; 5]).unwrap();
        // with tau^2 = 3200 the corrected Gram is almost surely indefinite
        let r = bias_corrected_fit(&released, &y);
        assert!(matches!(r, Err(DpError::NotIdentifiable { n: 5, .. })), "{r:?}");
    }

    #[test]
    fn corrected_fit_approaches_clean_ols() {
        let p = LaplaceParams::new(1.0, 4.0).unwrap();
        let pts = correction_error_curve(p, &[1.0, 1.0], 0.1, &[100_000], 10, 5).unwrap();
        assert!(pts[0].rms_corrected < 0.05, "{:?}", pts[0]);
        assert!(pts[0].corrected_wins >= 9, "{:?}", pts[0]);
    }

    #[test]
    fn slope_is_near_minus_half() {
        let p = LaplaceParams::new(1.0, 4.0).unwrap();
        let pts = correction_error_curve(p, &[1.0, 1.0], 0.1, &[1_000, 10_000, 100_000], 10, 7).unwrap();
        let s = log_log_slope(&pts);
        assert!((-0.7..=-0.3).contains(&s), "slope {s}: {pts:?}");
    }

    fn settings() -> MeasureSettings {
        MeasureSettings { loss: LossFn::RelativeL2, n_tasks: 20, n_test: 1000 }
    }

    #[test]
    fn noiseless_release_is_imitated_exactly() {
        let features = bounded_features(2, 1.0);
        let tasks = TaskSampler::linear(features, CoefficientPrior::Fixed { beta: vec![1.0, 1.0] }, 0.1);
        let r = dp_breach_experiment(LaplaceParams::new(1.0, f64::INFINITY).unwrap(), 2, &[10_000], 1, &tasks, &settings(), 1).unwrap();
        assert!(r.curve[0].rho_hat <= 1e-6, "{:?}", r.curve);
    }

    #[test]
    fn more_noise_leaks_less() {
        let features = bounded_features(2, 1.0);
        let tasks = TaskSampler::linear(features, CoefficientPrior::Fixed { beta: vec![1.0, 1.0] }, 0.1);
        let noisy = dp_breach_experiment(LaplaceParams::new(1.0, 2.0).unwrap(), 2, &[20_000], 4, &tasks, &settings(), 2).unwrap();
        let clean = dp_breach_experiment(LaplaceParams::new(1.0, 8.0).unwrap(), 2, &[20_000], 4, &tasks, &settings(), 2).unwrap();
        assert!(noisy.curve[0].rho_hat > clean.curve[0].rho_hat);
    }

    #[test]
    fn breach_curve_decreases() {
        let features = bounded_features(2, 1.0);
        let tasks = TaskSampler::linear(features, CoefficientPrior::Fixed { beta: vec![1.0, 1.0] }, 0.1);
        let r = dp_breach_experiment(LaplaceParams::new(1.0, 4.0).unwrap(), 2, &[1_000, 10_000, 100_000], 10, &tasks, &settings(), 3).unwrap();
        assert!(r.strictly_decreasing, "{:?}", r.curve);
        assert!(r.curve_csv().starts_with("n,rho_hat,std_error\n1000,"));
    }

    fn partial_setup(n: usize) -> (Module, TaskSampler, TestSampler) {
        let features = FeatureSampler::StandardNormal { dim: 4 };
        let x = features.sample(n, &mut rng::stream(4, "partial-x", 0)).unwrap();
        let tasks = TaskSampler::linear(features.clone(), CoefficientPrior::Fixed { beta: vec![1.0; 4] }, 0.1);
        (Module::new(Learner::ols(), x), tasks, TestSampler::new(features))
    }

    #[test]
    fn partial_release_keeps_privacy() {
        let (m, tasks, test) = partial_setup(10_000);
        let r = partial_release_experiment(&m, &[0], &tasks, &test, &settings(), 0.3, 5).unwrap();
        assert!(r.preserved);
        assert!((r.rho_partial - 0.75).abs() < 0.05, "{r:?}");
        assert_eq!(r.rho_none, 1.0);
    }

    #[test]
    fn full_and_empty_release_rejected() {
        let (m, tasks, test) = partial_setup(100);
        assert!(partial_release_experiment(&m, &[], &tasks, &test, &settings(), 0.3, 0).is_err());
        assert!(partial_release_experiment(&m, &[0, 1, 2, 3], &tasks, &test, &settings(), 0.3, 0).is_err());
        assert!(partial_release_experiment(&m, &[7], &tasks, &test, &settings(), 0.3, 0).is_err());
    }

    #[test]
    fn releasing_everything_imitates_exactly() {
        let (m, tasks, test) = partial_setup(500);
        let imitation = released_columns_imitation(&m, &[0, 1, 2, 3]).unwrap();
        let est = estimate_rho(&m, imitation.as_ref(), &tasks, &test, LossFn::ScaledL2, 5, 200, 0).unwrap();
        assert!(est.rho_hat < 1e-20);
    }

    #[test]
    fn population_partial_rho() {
        assert_eq!(partial_release_population_rho(&[1.0; 4], &[0], &[1.0; 4]), 0.75);
        assert_eq!(partial_release_population_rho(&[2.0, 0.0], &[0], &[1.0, 1.0]), 0.0);
    }
}
