use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::model::{DataMatrix, LabelVector, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogisticOutput {
    Probability,
    /// `1.0` when the probability is at least one half, else `0.0`.
    Label,
}

/// Binary logistic regression `x -> logistic(w . x + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub output: LogisticOutput,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the weights hit `weight_bound` (separable data) and were
    /// rescaled onto it.
    pub diverged: bool,
    /// Penalised mean log-likelihood at each accepted iterate.
    pub log_likelihood: Vec<f64>,
}

const SEPARATION_LOSS: f64 = 1e-8;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn new(weights: Vec<f64>, bias: f64, output: LogisticOutput) -> Self {
        Self { weights, bias, output, iterations: 0, converged: true, diverged: false, log_likelihood: Vec::new() }
    }

    pub fn with_output(mut self, output: LogisticOutput) -> Self {
        self.output = output;
        self
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.weights, x) + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let prob = self.probability(x);
        match self.output {
            LogisticOutput::Probability => prob,
            LogisticOutput::Label => {
                if prob >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub max_iter: usize,
    /// Stop once the gradient norm of the mean log-likelihood is at most this.
    pub tol: f64,
    /// L2 penalty on the weights (not the bias), on the mean-likelihood scale.
    pub ridge: f64,
    pub weight_bound: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-10, ridge: 0.0, weight_bound: 1e4 }
    }
}

struct Problem<'a> {
    design: DMatrix<f64>,
    y: &'a [f64],
    ridge: f64,
    p: usize,
}

impl Problem<'_> {
    fn objective(&self, theta: &DVector<f64>) -> f64 {
        let z = &self.design * theta;
        let n = self.y.len() as f64;
        let ll: f64 = z.iter().zip(self.y).map(|(&zi, &yi)| yi * zi - softplus(zi)).sum::<f64>() / n;
        let w2: f64 = theta.rows(0, self.p).norm_squared();
        ll - 0.5 * self.ridge * w2
    }

    fn gradient_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.y.len() as f64;
        let z = &self.design * theta;
        let resid = DVector::from_iterator(z.len(), z.iter().zip(self.y).map(|(&zi, &yi)| yi - sigmoid(zi)));
        let weights: Vec<f64> = z.iter().map(|&zi| sigmoid(zi) * (1.0 - sigmoid(zi))).collect();
        let mut grad = self.design.transpose() * resid / n;
        let mut weighted = self.design.clone();
        for (i, w) in weights.iter().enumerate() {
            weighted.row_mut(i).scale_mut(*w);
        }
        let mut hess = self.design.transpose() * weighted / n;
        for j in 0..self.p {
            grad[j] -= self.ridge * theta[j];
            hess[(j, j)] += self.ridge;
        }
        (grad, hess)
    }
}

/// Damped Newton ascent on the (optionally ridge-penalised) mean
/// log-likelihood, halving the step until the objective does not decrease.
///
/// Labels must be 0/1. Separable data drive the weights to infinity; they
/// are rescaled to `weight_bound` and `diverged` is set.
pub fn fit_logistic(x: &DataMatrix, y: &LabelVector, cfg: &LogisticConfig) -> Result<LogisticModel, ModelError> {
    let n = x.rows();
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { context: "logistic labels", expected: n, actual: y.len() });
    }
    if let Some(i) = y.values().iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(ModelError::InvalidLabel(format!("logistic labels must be 0/1, entry {i} is {}", y.values()[i])));
    }
    if cfg.max_iter == 0 || cfg.tol <= 0.0 || cfg.ridge < 0.0 {
        return Err(ModelError::InvalidParameter(format!("logistic config {cfg:?}")));
    }
    let p = x.cols();
    let mut design = DMatrix::from_element(n, p + 1, 1.0);
    design.columns_mut(0, p).copy_from(x.matrix());
    let problem = Problem { design, y: y.values(), ridge: cfg.ridge, p };

    let mut theta = DVector::zeros(p + 1);
    let mut obj = problem.objective(&theta);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        trace.push(obj);
        let (grad, hess) = problem.gradient_hessian(&theta);
        if grad.norm() <= cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                let mut jittered = hess;
                for j in 0..=p {
                    jittered[(j, j)] += 1e-10;
                }
                match jittered.cholesky() {
                    Some(ch) => ch.solve(&grad),
                    None => grad.clone(),
                }
            }
        };
        let mut t = 1.0;
        let accepted = loop {
            let cand = &theta + &step * t;
            let cand_obj = problem.objective(&cand);
            if cand_obj >= obj {
                break Some((cand, cand_obj));
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((cand, cand_obj)) = accepted else { break };
        let stalled = cand_obj == obj;
        theta = cand;
        obj = cand_obj;
        let wnorm = theta.rows(0, p).norm();
        if wnorm > cfg.weight_bound {
            theta *= cfg.weight_bound / wnorm;
            diverged = true;
            break;
        }
        if stalled {
            trace.push(obj);
            break;
        }
    }
    // A vanishing unpenalised loss means the classes are separated and the
    // maximiser lies at infinity.
    if !diverged && cfg.ridge == 0.0 && obj > -SEPARATION_LOSS {
        let wnorm = theta.rows(0, p).norm();
        if wnorm > 0.0 {
            theta *= cfg.weight_bound / wnorm;
        }
        diverged = true;
        converged = false;
    }
    Ok(LogisticModel {
        weights: theta.rows(0, p).iter().copied().collect(),
        bias: theta[p],
        output: LogisticOutput::Probability,
        iterations,
        converged,
        diverged,
        log_likelihood: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn labels(v: Vec<f64>) -> LabelVector {
        LabelVector::class_labels(v).unwrap()
    }

    #[test]
    fn mirrored_clusters_have_zero_bias() {
        // every point x with label 1 has a mirror -x with label 0; clusters overlap
        let mut r = rng::stream(3, "logit-sym", 0);
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..200 {
            let x = 1.0 + rng::standard_normal(&mut r);
            let z = rng::standard_normal(&mut r);
            rows.push(vec![x, z]);
            ys.push(1.0);
            rows.push(vec![-x, -z]);
            ys.push(0.0);
        }
        let m = fit_logistic(&DataMatrix::from_rows(&rows).unwrap(), &labels(ys), &LogisticConfig::default()).unwrap();
        assert!(m.converged);
        assert!(m.bias.abs() < 1e-3, "bias {}", m.bias);
        assert!(m.weights[0] > 0.5);
    }

    #[test]
    fn independent_labels_give_small_weights() {
        let mut r = rng::stream(4, "logit-null", 0);
        let n = 10_000;
        let xm = rng::gaussian_matrix(&mut r, n, 2);
        let ys: Vec<f64> = (0..n).map(|_| if r.random::<bool>() { 1.0 } else { 0.0 }).collect();
        let m = fit_logistic(&DataMatrix::new(xm).unwrap(), &labels(ys), &LogisticConfig::default()).unwrap();
        // sampling sd of each weight is about 2/sqrt(n) = 0.02
        for w in &m.weights {
            assert!(w.abs() < 0.08, "weight {w}");
        }
        assert!(m.bias.abs() < 0.08);
    }

    #[test]
    fn recovers_one_dimensional_ground_truth() {
        let mut r = rng::stream(5, "logit-truth", 0);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x = rng::standard_normal(&mut r);
            let p = sigmoid(2.0 * x - 1.0);
            xs.push(x);
            ys.push(if r.random::<f64>() < p { 1.0 } else { 0.0 });
        }
        let m = fit_logistic(&DataMatrix::from_column(&xs).unwrap(), &labels(ys), &LogisticConfig::default()).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 5e-2, "w {}", m.weights[0]);
        assert!((m.bias + 1.0).abs() < 5e-2, "b {}", m.bias);
        assert!(m.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn separable_data_flags_divergence() {
        let x = DataMatrix::from_column(&[-2.0, -1.0, 1.0, 2.0]).unwrap();
        let m = fit_logistic(&x, &labels(vec![0.0, 0.0, 1.0, 1.0]), &LogisticConfig::default()).unwrap();
        assert!(m.diverged || !m.converged);
        assert!(m.weights[0].abs() <= 1e4 + 1e-6);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn rejects_non_binary_labels() {
        let x = DataMatrix::from_column(&[0.0, 1.0]).unwrap();
        let y = LabelVector::regression(vec![0.0, 2.0]).unwrap();
        assert!(matches!(fit_logistic(&x, &y, &LogisticConfig::default()), Err(ModelError::InvalidLabel(_))));
    }
}
