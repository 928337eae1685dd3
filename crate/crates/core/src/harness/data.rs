use super::{DatasetSpec, HarnessError};
use crate::model::DataMatrix;
use crate::privacy::{CoefficientPrior, FeatureSampler, TaskSampler};
use crate::rng;

/// Two collated feature blocks and the law that generates task labels on
/// them.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub x_a: DataMatrix,
    pub x_b: DataMatrix,
    /// Law of a joint feature row `[x_a, x_b]`.
    pub features: FeatureSampler,
    pub tasks: TaskSampler,
}

impl SynthDataset {
    pub fn joint(&self) -> Result<DataMatrix, HarnessError> {
        Ok(self.x_a.hstack(&self.x_b)?)
    }
}

pub fn feature_law(spec: &DatasetSpec) -> Result<FeatureSampler, HarnessError> {
    let p = spec.p_a + spec.p_b;
    Ok(match spec.bound {
        Some(b) => FeatureSampler::UniformBox { lower: vec![-b; p], upper: vec![b; p] },
        None => FeatureSampler::Gaussian { covariance: spec.covariance.matrix(p)? },
    })
}

pub fn task_law(spec: &DatasetSpec, features: FeatureSampler) -> TaskSampler {
    let prior = match &spec.beta {
        Some(beta) => CoefficientPrior::Fixed { beta: beta.clone() },
        None => CoefficientPrior::StandardNormal,
    };
    TaskSampler::linear(features, prior, spec.noise_sigma)
}

/// Rows i.i.d. from the declared law, split after column `p_a`.
pub fn synth_dataset(spec: &DatasetSpec, seed: u64) -> Result<SynthDataset, HarnessError> {
    let features = feature_law(spec)?;
    let x = features.sample(spec.n, &mut rng::stream(seed, "synth", 0))?;
    let a_cols: Vec<usize> = (0..spec.p_a).collect();
    let b_cols: Vec<usize> = (spec.p_a..spec.p_a + spec.p_b).collect();
    let pick = |cols: &[usize]| -> Result<DataMatrix, HarnessError> {
        if cols.is_empty() {
            Ok(DataMatrix::no_features(spec.n))
        } else {
            Ok(x.select_columns(cols)?)
        }
    };
    Ok(SynthDataset { x_a: pick(&a_cols)?, x_b: pick(&b_cols)?, tasks: task_law(spec, features.clone()), features })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::CovarianceSpec;

    fn spec(n: usize, p: usize) -> DatasetSpec {
        DatasetSpec { n, p_a: 0, p_b: p, covariance: CovarianceSpec::Identity, noise_sigma: 0.1, bound: None, beta: None }
    }

    #[test]
    fn identity_covariance_is_recovered() {
        let d = synth_dataset(&spec(100_000, 3), 1).unwrap();
        let x = d.x_b.matrix();
        let cov = x.transpose() * x / x.nrows() as f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)] - target).abs() < 0.05, "({i},{j}) = {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn single_row() {
        let d = synth_dataset(&spec(1, 3), 2).unwrap();
        assert_eq!(d.x_b.rows(), 1);
        assert_eq!(d.x_a.cols(), 0);
    }

    #[test]
    fn bounded_entries_stay_in_range() {
        let s = DatasetSpec { bound: Some(1.0), ..spec(2000, 4) };
        let d = synth_dataset(&s, 3).unwrap();
        assert!(d.x_b.matrix().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn blocks_split_the_joint_row() {
        let s = DatasetSpec { p_a: 2, p_b: 1, covariance: CovarianceSpec::Equicorrelated { rho: 0.5 }, ..spec(10, 1) };
        let d = synth_dataset(&s, 4).unwrap();
        assert_eq!((d.x_a.cols(), d.x_b.cols()), (2, 1));
        assert_eq!(d.joint().unwrap().cols(), 3);
    }
}
