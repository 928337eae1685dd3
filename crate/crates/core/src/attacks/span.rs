use nalgebra::DMatrix;
use serde::Serialize;

use super::{AttackError, Oracle};
use crate::linalg::{self, RANK_RTOL};
use crate::model::{LabelVector, ResponseMode, SideInfo};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpanRoute {
    /// Span of the fitted parts `P y`.
    Direct,
    /// Span of the residual parts `(I - P) y`, complemented.
    Complement,
}

/// Orthonormal basis of the recovered column space.
#[derive(Debug, Clone, Serialize)]
pub struct SpanBasis {
    #[serde(skip)]
    pub basis: DMatrix<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
    pub route: SpanRoute,
    pub queries: usize,
}

/// Recovers `span(X)` of an OLS service on `p` features from `k1` random
/// Gaussian label queries.
pub fn recover_column_space(oracle: &mut dyn Oracle, k1: usize, p: usize, seed: u64) -> Result<SpanBasis, AttackError> {
    let n = oracle.rows().ok_or(AttackError::WrongMode { expected: "a label-query service", actual: oracle.mode() })?;
    let required = p.min(n.saturating_sub(p));
    if k1 < required {
        return Err(AttackError::InsufficientQueries { k1, required });
    }
    let mut r = rng::stream(seed, "span-labels", 0);
    let labels = (0..k1)
        .map(|_| LabelVector::regression((0..n).map(|_| rng::standard_normal(&mut r)).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    recover_column_space_with(oracle, &labels, p)
}

/// As [`recover_column_space`] with caller-chosen label vectors.
///
/// With at least `p` labels the fitted parts are orthonormalised directly.
/// With fewer (possible only when `n - p < p`) the residual parts span the
/// `(n - p)`-dimensional orthogonal complement, whose complement is returned.
pub fn recover_column_space_with(oracle: &mut dyn Oracle, labels: &[LabelVector], p: usize) -> Result<SpanBasis, AttackError> {
    let mode = oracle.mode();
    if !matches!(mode, ResponseMode::Residual | ResponseMode::Fitted) {
        return Err(AttackError::WrongMode { expected: "residual or fitted", actual: mode });
    }
    let n = oracle.rows().ok_or(AttackError::WrongMode { expected: "a label-query service", actual: mode })?;
    if p == 0 || p > n {
        return Err(AttackError::InvalidParameter(format!("p = {p} with n = {n} rows")));
    }
    let k1 = labels.len();
    let required = p.min(n - p);
    if k1 < required {
        return Err(AttackError::InsufficientQueries { k1, required });
    }
    oracle.add_side_info(SideInfo::ModelClass { class: format!("ols on {p} features") });
    let start = oracle.queries_used();
    let mut fitted = DMatrix::zeros(n, k1);
    let mut residual = DMatrix::zeros(n, k1);
    for (l, y) in labels.iter().enumerate() {
        let reply = oracle.query_labels(y)?;
        for i in 0..n {
            let v = reply.values[i];
            let (f, e) = match mode {
                ResponseMode::Fitted => (v, y.values()[i] - v),
                _ => (y.values()[i] - v, v),
            };
            fitted[(i, l)] = f;
            residual[(i, l)] = e;
        }
    }
    let queries = oracle.queries_used() - start;
    let svd_fail = || AttackError::Singular("response SVD did not converge".into());
    if k1 >= p {
        let basis = linalg::orthonormal_basis(&fitted, RANK_RTOL).ok_or_else(svd_fail)?;
        let rank = basis.ncols();
        return Ok(SpanBasis { basis, rank, rank_deficient: rank < p, route: SpanRoute::Direct, queries });
    }
    let complement = linalg::orthonormal_basis(&residual, RANK_RTOL).ok_or_else(svd_fail)?;
    let basis = linalg::orthogonal_complement(&complement);
    let rank = basis.ncols();
    Ok(SpanBasis { basis, rank, rank_deficient: rank != p, route: SpanRoute::Complement, queries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::ApiView;
    use crate::model::{DataMatrix, Learner, Module};

    fn view(n: usize, p: usize, mode: ResponseMode) -> (ApiView, DMatrix<f64>) {
        let x = rng::gaussian_matrix(&mut rng::stream(7, "span-x", n as u64), n, p);
        let m = Module::new(Learner::ols(), DataMatrix::new(x.clone()).unwrap());
        (ApiView::service("bob", m, mode).unwrap(), x)
    }

    #[test]
    fn three_queries_recover_three_dim_span() {
        let (mut v, x) = view(50, 3, ResponseMode::Residual);
        let s = recover_column_space(&mut v, 3, 3, 1).unwrap();
        assert_eq!(s.rank, 3);
        assert_eq!(s.queries, 3);
        let angles = linalg::principal_angles(&s.basis, &x).unwrap();
        assert!(angles.iter().all(|a| *a <= 1e-8), "{angles:?}");
        let gram = s.basis.transpose() * &s.basis;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn too_few_queries_rejected() {
        let (mut v, _) = view(50, 3, ResponseMode::Residual);
        assert!(matches!(recover_column_space(&mut v, 2, 3, 1), Err(AttackError::InsufficientQueries { k1: 2, required: 3 })));
        assert_eq!(v.queries_used(), 0);
    }

    #[test]
    fn complement_route_when_rows_are_few() {
        let (mut v, x) = view(7, 5, ResponseMode::Residual);
        let s = recover_column_space(&mut v, 2, 5, 2).unwrap();
        assert_eq!(s.route, SpanRoute::Complement);
        assert_eq!(s.rank, 5);
        let angles = linalg::principal_angles(&s.basis, &x).unwrap();
        assert!(angles.iter().all(|a| *a <= 1e-8), "{angles:?}");
    }

    #[test]
    fn fitted_mode_works_too() {
        let (mut v, x) = view(30, 2, ResponseMode::Fitted);
        let s = recover_column_space(&mut v, 4, 2, 3).unwrap();
        assert!(linalg::principal_angles(&s.basis, &x).unwrap().iter().all(|a| *a <= 1e-8));
    }

    #[test]
    fn labels_confined_to_a_subspace_flag_rank_deficiency() {
        let (mut v, x) = view(40, 3, ResponseMode::Residual);
        // every label lies in span of the first two columns of X
        let labels: Vec<LabelVector> = (0..3)
            .map(|l| {
                let a = 1.0 + l as f64;
                let b = 2.0 - l as f64 * 0.7;
                LabelVector::regression((0..40).map(|i| a * x[(i, 0)] + b * x[(i, 1)]).collect()).unwrap()
            })
            .collect();
        let s = recover_column_space_with(&mut v, &labels, 3).unwrap();
        assert_eq!(s.rank, 2);
        assert!(s.rank_deficient);
    }
}
