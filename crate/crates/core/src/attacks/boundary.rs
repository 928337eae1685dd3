use nalgebra::DMatrix;
use serde::Serialize;

use super::api::expect_label;
use super::{AttackError, HackingAlgorithm, ImitationSystem, Oracle};
use crate::learners::LinearClassifier;
use crate::linalg;
use crate::model::{FittedModel, PredictionFn, Provenance, ResponseMode, SideInfo};
use crate::rng;

#[derive(Debug, Clone)]
pub struct BoundaryConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Number of boundary points; at least `p + 1`.
    pub n_boundary: usize,
    /// Bisection stops once the bracket along the chord is this short.
    pub tol: f64,
    /// Random probes allowed while looking for both labels.
    pub probe_budget: usize,
}

impl BoundaryConfig {
    /// Box `[-10, 10]^p`, `tol = 1e-9`, `2(p + 1)` boundary points.
    pub fn new(p: usize) -> Self {
        Self { lower: vec![-10.0; p], upper: vec![10.0; p], n_boundary: 2 * (p + 1), tol: 1e-9, probe_budget: 1000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryResult {
    pub classifier: LinearClassifier,
    pub boundary_points: Vec<Vec<f64>>,
    /// Bisection queries spent on each boundary point.
    pub queries_per_point: Vec<usize>,
    pub chord_lengths: Vec<f64>,
    pub queries: usize,
    #[serde(skip)]
    pub system: ImitationSystem,
}

/// Bisection steps needed to shrink a chord of length `chord` to `tol`.
pub fn bisection_queries(chord: f64, tol: f64) -> usize {
    if chord <= tol {
        0
    } else {
        (chord / tol).log2().ceil() as usize
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Label-only extraction of a linear classifier.
///
/// Random probes find one point of each label. Each boundary point is then
/// located by bisection on the chord from a fresh random point to the anchor
/// of the opposite label, and `(w, c)` is the right singular vector of
/// `[x_k, 1]` with the smallest singular value.
pub fn boundary_extract(oracle: &mut dyn Oracle, cfg: &BoundaryConfig, seed: u64) -> Result<BoundaryResult, AttackError> {
    if oracle.mode() != ResponseMode::Label {
        return Err(AttackError::WrongMode { expected: "label", actual: oracle.mode() });
    }
    let p = cfg.lower.len();
    if p == 0 || cfg.upper.len() != p || cfg.n_boundary < p + 1 || !(cfg.tol > 0.0) {
        return Err(AttackError::InvalidParameter(format!("boundary extraction needs n_boundary >= {} and tol > 0", p + 1)));
    }
    oracle.add_side_info(SideInfo::ModelClass { class: "linear-classifier".into() });
    oracle.add_side_info(SideInfo::FeatureBox { lower: cfg.lower.clone(), upper: cfg.upper.clone() });
    let start = oracle.queries_used();
    let mut probe_rng = rng::stream(seed, "boundary-probe", 0);
    let (mut positive, mut negative) = (None, None);
    let mut probes = 0;
    let mut first_label = 1;
    while positive.is_none() || negative.is_none() {
        if probes == cfg.probe_budget {
            return Err(AttackError::OneClassObserved { label: first_label, probes });
        }
        let x = rng::uniform_in_box(&mut probe_rng, &cfg.lower, &cfg.upper);
        let label = expect_label(oracle.query_row(&x)?)?;
        if probes == 0 {
            first_label = label;
        }
        probes += 1;
        if label > 0 {
            positive.get_or_insert(x);
        } else {
            negative.get_or_insert(x);
        }
    }
    let (positive, negative) = (positive.expect("found"), negative.expect("found"));

    let mut chord_rng = rng::stream(seed, "boundary-chord", 0);
    let mut points = Vec::with_capacity(cfg.n_boundary);
    let mut per_point = Vec::with_capacity(cfg.n_boundary);
    let mut chords = Vec::with_capacity(cfg.n_boundary);
    for _ in 0..cfg.n_boundary {
        let r = rng::uniform_in_box(&mut chord_rng, &cfg.lower, &cfg.upper);
        let label = expect_label(oracle.query_row(&r)?)?;
        let anchor = if label > 0 { &negative } else { &positive };
        let diff: Vec<f64> = anchor.iter().zip(&r).map(|(a, b)| a - b).collect();
        let chord = linalg::norm(&diff);
        let (mut ta, mut tb) = (0.0, 1.0);
        let mut spent = 0;
        while chord * (tb - ta) > cfg.tol {
            let mid = ta + (tb - ta) / 2.0;
            spent += 1;
            if expect_label(oracle.query_row(&lerp(&r, anchor, mid))?)? == label {
                ta = mid;
            } else {
                tb = mid;
            }
        }
        points.push(lerp(&r, anchor, ta + (tb - ta) / 2.0));
        per_point.push(spent);
        chords.push(chord);
    }

    let m = DMatrix::from_fn(points.len(), p + 1, |i, j| if j < p { points[i][j] } else { 1.0 });
    let svd = m.svd(false, true);
    let vt = svd.v_t.as_ref().ok_or_else(|| AttackError::Singular("boundary SVD".into()))?;
    let k = svd.singular_values.imin();
    let mut normal: Vec<f64> = vt.row(k).iter().copied().collect();
    let offset = normal.pop().expect("p + 1 entries");
    let mut classifier = LinearClassifier::new(normal.clone(), offset)
        .map_err(|_| AttackError::Singular("boundary points do not determine a hyperplane".into()))?;
    if classifier.decision(&positive) < 0.0 {
        classifier = LinearClassifier::new(normal.iter().map(|v| -v).collect(), -offset)?;
    }
    let function = PredictionFn::new(FittedModel::Classifier(classifier.clone()), p, Provenance::note("boundary", "fitted hyperplane"));
    let system = ImitationSystem {
        attack: "boundary-extraction".into(),
        information: oracle.information().clone(),
        queries_used: oracle.queries_used(),
        algorithm: HackingAlgorithm::Fixed { function },
    };
    Ok(BoundaryResult {
        classifier,
        boundary_points: points,
        queries_per_point: per_point,
        chord_lengths: chords,
        queries: oracle.queries_used() - start,
        system,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::ApiView;

    fn view(w: Vec<f64>, c: f64) -> ApiView {
        let p = w.len();
        let f = PredictionFn::new(FittedModel::Classifier(LinearClassifier::new(w, c).unwrap()), p, Provenance::default());
        ApiView::predictor("clf", f, ResponseMode::Label).unwrap()
    }

    fn angle(a: &[f64], b: &[f64]) -> f64 {
        let cos = linalg::dot(a, b) / (linalg::norm(a) * linalg::norm(b));
        cos.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn axis_aligned_target() {
        let mut v = view(vec![1.0, 0.0], 0.0);
        let r = boundary_extract(&mut v, &BoundaryConfig::new(2), 1).unwrap();
        assert!(r.boundary_points.iter().all(|x| x[0].abs() <= 1e-9));
        let mut est = r.classifier.weights().to_vec();
        est.push(r.classifier.offset());
        assert!(angle(&est, &[1.0, 0.0, 0.0]) <= 1e-3);
        for (q, chord) in r.queries_per_point.iter().zip(&r.chord_lengths) {
            assert_eq!(*q, bisection_queries(*chord, 1e-9));
        }
    }

    #[test]
    fn scaled_target_gives_same_direction() {
        let run = |s: f64| {
            let mut v = view(vec![s * 0.6, s * -0.8, s * 0.3], s * 1.5);
            boundary_extract(&mut v, &BoundaryConfig::new(3), 4).unwrap().classifier.unit_normal()
        };
        let a = run(1.0);
        let b = run(2.0);
        assert!(angle(&a, &b) <= 1e-6);
        assert!(angle(&a, &LinearClassifier::new(vec![0.6, -0.8, 0.3], 1.5).unwrap().unit_normal()) <= 1e-3);
    }

    #[test]
    fn one_class_box_is_reported() {
        let mut v = view(vec![1.0, 0.0], 100.0);
        let cfg = BoundaryConfig { probe_budget: 50, ..BoundaryConfig::new(2) };
        assert!(matches!(boundary_extract(&mut v, &cfg, 0), Err(AttackError::OneClassObserved { label: 1, probes: 50 })));
    }
}
