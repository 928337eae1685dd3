use nalgebra::DMatrix;

use super::api::expect_value;
use super::{AttackError, HackingAlgorithm, ImitationSystem, Oracle};
use crate::learners::{LogisticModel, LogisticOutput};
use crate::linalg;
use crate::model::{FittedModel, PredictionFn, Provenance, ResponseMode, SideInfo};
use crate::rng;

/// Query matrices `[x, 1]` with reciprocal condition below this are redrawn.
const RCOND_MIN: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EquationSolvingResult {
    pub model: LogisticModel,
    pub queries: usize,
    pub system: ImitationSystem,
}

fn logit(p: f64) -> Result<f64, AttackError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AttackError::Singular(format!("saturated probability {p}")));
    }
    Ok((p / (1.0 - p)).ln())
}

/// Recovers the weights and bias of a logistic target from `p + 1` random
/// Gaussian queries: `logit(response) = w . x + b` is a square linear system.
pub fn equation_solving_extract(oracle: &mut dyn Oracle, p: usize, seed: u64) -> Result<EquationSolvingResult, AttackError> {
    if oracle.mode() != ResponseMode::Probability {
        return Err(AttackError::WrongMode { expected: "probability", actual: oracle.mode() });
    }
    if p == 0 {
        return Err(AttackError::InvalidParameter("feature dimension must be positive".into()));
    }
    oracle.add_side_info(SideInfo::ModelClass { class: "logistic".into() });
    // redraw once if the query matrix is numerically singular
    let mut design = None;
    for attempt in 0..2 {
        let x = rng::gaussian_matrix(&mut rng::stream(seed, "equation-solving", attempt), p + 1, p);
        let mut a = DMatrix::from_element(p + 1, p + 1, 1.0);
        a.columns_mut(0, p).copy_from(&x);
        let sv = a.singular_values();
        if sv.min() / sv.max() >= RCOND_MIN {
            design = Some((x, a));
            break;
        }
    }
    let (x, a) = design.ok_or_else(|| AttackError::Singular("query matrix singular after one redraw".into()))?;
    let start = oracle.queries_used();
    let mut rhs = DMatrix::zeros(p + 1, 1);
    for i in 0..=p {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        rhs[(i, 0)] = logit(expect_value(oracle.query_row(&row)?)?)?;
    }
    let theta = linalg::solve_square(&a, &rhs, RCOND_MIN * 1e-2).ok_or_else(|| AttackError::Singular("logit system".into()))?;
    let model = LogisticModel::new(theta.column(0).rows(0, p).iter().copied().collect(), theta[(p, 0)], LogisticOutput::Probability);
    let function = PredictionFn::new(FittedModel::Logistic(model.clone()), p, Provenance::note("equation-solving", "solved logit system"));
    let system = ImitationSystem {
        attack: "equation-solving".into(),
        information: oracle.information().clone(),
        queries_used: oracle.queries_used(),
        algorithm: HackingAlgorithm::Fixed { function },
    };
    Ok(EquationSolvingResult { model, queries: oracle.queries_used() - start, system })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::ApiView;
    use crate::model::PredictionFn;
    use rand::Rng;

    fn target(w: Vec<f64>, b: f64) -> ApiView {
        let p = w.len();
        let f = PredictionFn::new(FittedModel::Logistic(LogisticModel::new(w, b, LogisticOutput::Probability)), p, Provenance::default());
        ApiView::predictor("logit", f, ResponseMode::Probability).unwrap()
    }

    #[test]
    fn zero_target_recovers_zeros() {
        let mut v = target(vec![0.0; 3], 0.0);
        let r = equation_solving_extract(&mut v, 3, 1).unwrap();
        assert!(r.model.weights.iter().all(|w| w.abs() < 1e-12));
        assert!(r.model.bias.abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_target_exact_with_three_queries() {
        let mut v = target(vec![2.0, -1.0], 0.5);
        let r = equation_solving_extract(&mut v, 2, 2).unwrap();
        assert_eq!(r.queries, 3);
        assert_eq!(v.queries_used(), 3);
        assert!((r.model.weights[0] - 2.0).abs() < 1e-8);
        assert!((r.model.weights[1] + 1.0).abs() < 1e-8);
        assert!((r.model.bias - 0.5).abs() < 1e-8);
    }

    #[test]
    fn random_targets_recovered_to_relative_precision() {
        let mut r = rng::stream(9, "eq-targets", 0);
        for t in 0..100 {
            let p = 1 + t % 5;
            let w: Vec<f64> = (0..p).map(|_| rng::standard_normal(&mut r)).collect();
            let b = r.random_range(-1.0..1.0);
            let mut v = target(w.clone(), b);
            let got = equation_solving_extract(&mut v, p, t as u64).unwrap();
            assert_eq!(got.queries, p + 1);
            let mut truth = w.clone();
            truth.push(b);
            let mut est = got.model.weights.clone();
            est.push(got.model.bias);
            let err: Vec<f64> = truth.iter().zip(&est).map(|(a, b)| a - b).collect();
            assert!(linalg::norm(&err) / linalg::norm(&truth) <= 1e-8);
        }
    }

    #[test]
    fn label_mode_is_rejected() {
        let f = PredictionFn::new(
            FittedModel::Logistic(LogisticModel::new(vec![1.0], 0.0, LogisticOutput::Label)),
            1,
            Provenance::default(),
        );
        let mut v = ApiView::predictor("l", f, ResponseMode::Label).unwrap();
        assert!(matches!(equation_solving_extract(&mut v, 1, 0), Err(AttackError::WrongMode { .. })));
    }
}
