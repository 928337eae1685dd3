//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Singular values below `RANK_RTOL * sigma_max` are treated as zero.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub rank: usize,
}

fn svd(m: &DMatrix<f64>) -> Option<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Returns `None` only when the SVD iteration fails to converge.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<LeastSquares> {
    if a.ncols() == 0 {
        return Some(LeastSquares { solution: DVector::zeros(0), rank: 0 });
    }
    let svd = svd(a)?;
    let smax = svd.singular_values.max();
    let cutoff = (smax * RANK_RTOL).max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let solution = svd.solve(b, cutoff).ok()?;
    Some(LeastSquares { solution, rank })
}

/// Orthonormal basis (as columns) of the column space of `m`, with numerical
/// rank decided relative to the largest singular value.
pub fn orthonormal_basis(m: &DMatrix<f64>, rtol: f64) -> Option<DMatrix<f64>> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Some(DMatrix::zeros(m.nrows(), 0));
    }
    let svd = svd(m)?;
    let u = svd.u.as_ref()?;
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Some(DMatrix::zeros(m.nrows(), 0));
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > smax * rtol)
        .map(|(i, _)| i)
        .collect();
    Some(u.select_columns(&keep))
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in
/// `R^n`, where `basis` has orthonormal columns.
pub fn orthogonal_complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows();
    let projector = DMatrix::identity(n, n) - basis * basis.transpose();
    let eig = SymmetricEigen::new(projector);
    let keep: Vec<usize> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, _)| i)
        .collect();
    eig.eigenvectors.select_columns(&keep)
}

/// Principal angles (radians, ascending) between two column spaces.
///
/// Computed from the singular values of the part of `span(b)` left over
/// after projecting onto `span(a)`; these are the sines of the angles, which
/// keeps small angles accurate where `acos` of cosines near one would not.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<Vec<f64>> {
    let qa = orthonormal_basis(a, RANK_RTOL)?;
    let qb = orthonormal_basis(b, RANK_RTOL)?;
    // the smaller space is measured against the larger one
    let (big, small) = if qa.ncols() >= qb.ncols() { (qa, qb) } else { (qb, qa) };
    if small.ncols() == 0 {
        return Some(Vec::new());
    }
    let leftover = &small - &big * (big.transpose() * &small);
    let sv = SVD::try_new(leftover, false, false, f64::EPSILON, 0)?.singular_values;
    let mut angles: Vec<f64> = sv.iter().map(|s| s.clamp(0.0, 1.0).asin()).collect();
    angles.sort_by(|x, y| x.total_cmp(y));
    Some(angles)
}

/// Solves the square system `a x = b`, refusing numerically singular `a`
/// (reciprocal condition number below `rcond_min`).
pub fn solve_square(a: &DMatrix<f64>, b: &DMatrix<f64>, rcond_min: f64) -> Option<DMatrix<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return None;
    }
    let sv = SVD::try_new(a.clone(), false, false, f64::EPSILON, 0)?.singular_values;
    let smax = sv.max();
    if smax == 0.0 || sv.min() / smax < rcond_min {
        return None;
    }
    a.clone().lu().solve(b)
}

/// Euclidean norm of a slice.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_solution_for_duplicated_column() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let b = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let ls = least_squares(&a, &b).unwrap();
        assert_eq!(ls.rank, 1);
        assert!((ls.solution[0] - 1.0).abs() < 1e-12);
        assert!((ls.solution[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complement_dimensions_add_up() {
        let m = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 0.0, 0.0]);
        let q = orthonormal_basis(&m, RANK_RTOL).unwrap();
        let c = orthogonal_complement(&q);
        assert_eq!(c.ncols(), 3);
        assert!((q.transpose() * &c).norm() < 1e-12);
    }

    #[test]
    fn principal_angle_between_axes() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let ang = principal_angles(&a, &b).unwrap();
        assert!((ang[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let same = principal_angles(&a, &(a.clone() * 3.0)).unwrap();
        assert!(same[0] < 1e-15);
    }

    #[test]
    fn singular_square_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve_square(&a, &DMatrix::identity(2, 2), 1e-12).is_none());
    }
}
