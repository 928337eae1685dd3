use nalgebra::DMatrix;

use super::{recover_column_space, ApiView, AttackError, HackingAlgorithm, ImitationSystem, Oracle, SpanBasis, TaskRequest};
use crate::linalg;
use crate::model::{DataMatrix, LabelVector, Learner, Module, ResponseMode, SideInfo};
use crate::privacy::{Imitation, ImitationBuilder, PrivacyError};
use crate::rng;

const RCOND_MIN: f64 = 1e-12;

/// `Q_hat` and the reconstructed features.
#[derive(Debug, Clone)]
pub struct RotationSolution {
    pub q_hat: DMatrix<f64>,
    pub reconstruction: DataMatrix,
}

/// Cross-covariance `X~^T y / n`.
pub fn cross_covariance(x_tilde: &DataMatrix, y: &LabelVector) -> Result<Vec<f64>, AttackError> {
    if y.len() != x_tilde.rows() {
        return Err(AttackError::InvalidParameter(format!("{} labels for {} rows", y.len(), x_tilde.rows())));
    }
    let k = x_tilde.matrix().transpose() * y.to_dvector() / x_tilde.rows() as f64;
    Ok(k.iter().copied().collect())
}

/// Solves `[K_1 .. K_p] = Q [beta_1 .. beta_p]` for `Q` and undoes it.
///
/// Rows of `x_tilde` are taken as `Q x_B`, so the reconstruction is
/// `X~ Q_hat^{-T}`.
pub fn solve_rotation(x_tilde: &DataMatrix, betas: &[Vec<f64>], ks: &[Vec<f64>]) -> Result<RotationSolution, AttackError> {
    let p = x_tilde.cols();
    if betas.len() != p || ks.len() != p || betas.iter().chain(ks).any(|v| v.len() != p) {
        return Err(AttackError::InvalidParameter(format!("need {p} coefficient and cross-covariance vectors of length {p}")));
    }
    let b = DMatrix::from_fn(p, p, |i, t| betas[t][i]);
    let k = DMatrix::from_fn(p, p, |i, t| ks[t][i]);
    // Q B = K  <=>  B^T Q^T = K^T
    let q_t = linalg::solve_square(&b.transpose(), &k.transpose(), RCOND_MIN)
        .ok_or_else(|| AttackError::Singular("coefficient matrix B".into()))?;
    let q_hat = q_t.transpose();
    // X^ Q^T = X~  <=>  Q X^T = X~^T
    let x_hat_t = linalg::solve_square(&q_hat, &x_tilde.matrix().transpose(), RCOND_MIN)
        .ok_or_else(|| AttackError::Singular("estimated rotation Q".into()))?;
    Ok(RotationSolution { q_hat, reconstruction: DataMatrix::new(x_hat_t.transpose())? })
}

#[derive(Debug, Clone)]
pub struct RotationAttack {
    pub span: SpanBasis,
    pub solution: RotationSolution,
    pub system: ImitationSystem,
}

/// Reconstructs an OLS service's private features, given that their true
/// covariance is the identity and that task labels `X_B beta_t + eta_t` can be
/// generated.
///
/// The column space comes from `p` label queries; the scaled basis
/// `X~ = sqrt(n) U` equals `X_B Q^T` for an unknown `Q`, which is estimated
/// from the cross-covariances of `p` generated tasks with `beta_t = e_t`.
pub fn covariance_rotation_attack(oracle: &mut dyn Oracle, p: usize, sigma: f64, seed: u64) -> Result<RotationAttack, AttackError> {
    let n = oracle.rows().ok_or(AttackError::WrongMode { expected: "a label-query service", actual: oracle.mode() })?;
    oracle.add_side_info(SideInfo::Covariance { matrix: (0..p).map(|i| (0..p).map(|j| f64::from(u8::from(i == j))).collect()).collect() });
    oracle.add_side_info(SideInfo::NoiseLevel { sigma });
    let span = recover_column_space(oracle, p, p, rng::derive_seed(seed, "rotation-span", 0))?;
    if span.rank != p {
        return Err(AttackError::Singular(format!("recovered span has rank {} < {p}", span.rank)));
    }
    let x_tilde = DataMatrix::new(&span.basis * (n as f64).sqrt())?;
    let mut betas = Vec::with_capacity(p);
    let mut ks = Vec::with_capacity(p);
    for t in 0..p {
        let mut beta = vec![0.0; p];
        beta[t] = 1.0;
        let request = TaskRequest::Linear { beta: beta.clone(), sigma, seed: rng::derive_seed(seed, "rotation-task", t as u64) };
        let y = oracle.generate_task(&request)?;
        ks.push(cross_covariance(&x_tilde, &y)?);
        betas.push(beta);
    }
    let solution = solve_rotation(&x_tilde, &betas, &ks)?;
    let system = ImitationSystem {
        attack: "covariance-rotation".into(),
        information: oracle.information().clone(),
        queries_used: oracle.queries_used(),
        algorithm: HackingAlgorithm::Refit { learner: Learner::ols(), data: solution.reconstruction.clone() },
    };
    Ok(RotationAttack { span, solution, system })
}

/// Runs the attack against a fresh residual-mode view of the module.
#[derive(Debug, Clone)]
pub struct RotationAttackBuilder {
    pub sigma: f64,
}

impl ImitationBuilder for RotationAttackBuilder {
    fn name(&self) -> String {
        "covariance-rotation".into()
    }

    fn build(&self, module: &Module, seed: u64) -> Result<Box<dyn Imitation + '_>, PrivacyError> {
        let fail = |e: AttackError| PrivacyError::Build { name: self.name(), cause: e.to_string() };
        let mut view = ApiView::service("module", module.clone(), ResponseMode::Residual).map_err(fail)?.with_task_oracle();
        let attack = covariance_rotation_attack(&mut view, module.dim(), self.sigma, seed).map_err(fail)?;
        Ok(Box::new(attack.system))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_coefficients_give_k_directly() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let ks = vec![vec![2.0, 0.5], vec![-1.0, 3.0]];
        let s = solve_rotation(&x, &[vec![1.0, 0.0], vec![0.0, 1.0]], &ks).unwrap();
        assert_eq!(s.q_hat, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 0.5, 3.0]));
    }

    #[test]
    fn noiseless_rotation_is_undone() {
        let xb = rng::gaussian_matrix(&mut rng::stream(1, "xb", 0), 20, 3);
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, -0.3, 0.9, 0.1, 0.5, 0.0, 1.2]);
        let x_tilde = DataMatrix::new(&xb * q.transpose()).unwrap();
        let betas = vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.0, -1.0], vec![0.5, 0.0, 2.0]];
        let ks: Vec<Vec<f64>> = betas.iter().map(|b| (&q * nalgebra::DVector::from_column_slice(b)).iter().copied().collect()).collect();
        let s = solve_rotation(&x_tilde, &betas, &ks).unwrap();
        assert!((s.reconstruction.matrix() - &xb).amax() < 1e-10);
    }

    #[test]
    fn singular_coefficients_rejected() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = solve_rotation(&x, &[vec![1.0, 1.0], vec![2.0, 2.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(r, Err(AttackError::Singular(_))));
    }

    #[test]
    fn reconstruction_error_small_at_twenty_thousand_rows() {
        let n = 20_000;
        let xb = rng::gaussian_matrix(&mut rng::stream(2, "xb", 0), n, 3);
        let module = Module::new(Learner::ols(), DataMatrix::new(xb.clone()).unwrap());
        let mut v = ApiView::service("bob", module, ResponseMode::Residual).unwrap().with_task_oracle();
        let a = covariance_rotation_attack(&mut v, 3, 0.1, 5).unwrap();
        let err = (a.solution.reconstruction.matrix() - &xb).norm() / xb.norm();
        assert!(err < 0.05, "relative error {err}");
        assert_eq!(v.queries_used(), 3);
        assert!(v.information().side_info_tags().contains(&"task-labels".to_string()));
    }
}
