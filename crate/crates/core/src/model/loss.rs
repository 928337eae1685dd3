use serde::{Deserialize, Serialize};

use super::ModelError;

/// Module outputs with `|b| <= EPS_DENOM` make the pointwise scaled-L2 loss
/// undefined; such test points are skipped and counted.
pub const EPS_DENOM: f64 = 1e-12;

/// Loss between an imitation output `a` and a module output `b`.
///
/// Per-task aggregation goes through [`LossFn::contribution`]: each test
/// point adds a `(numerator, denominator)` pair and the task loss is
/// `sum(numerators) / sum(denominators)`.
///
/// * `ScaledL2`: pointwise `(a-b)^2 / b^2`, averaged over test points.
/// * `RelativeL2`: `sum (a-b)^2 / sum b^2`, the squared L2 distance between
///   the two functions scaled by the squared norm of the module's function.
///   Pointwise values agree with `ScaledL2`; only the aggregation differs.
///   Use it for linear modules, where the pointwise ratio has no finite mean.
/// * `ZeroOne`: `1{a != b}`.
/// * `Squared`: `(a-b)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LossFn {
    #[default]
    ScaledL2,
    RelativeL2,
    ZeroOne,
    Squared,
}

impl LossFn {
    pub fn id(&self) -> &'static str {
        match self {
            LossFn::ScaledL2 => "scaled-l2",
            LossFn::RelativeL2 => "relative-l2",
            LossFn::ZeroOne => "zero-one",
            LossFn::Squared => "squared",
        }
    }

    /// Pointwise loss.
    pub fn loss(&self, a: f64, b: f64) -> Result<f64, ModelError> {
        match self {
            LossFn::ScaledL2 | LossFn::RelativeL2 => {
                if b.abs() <= EPS_DENOM {
                    return Err(ModelError::DegenerateDenominator { a, b });
                }
                Ok((a - b).powi(2) / (b * b))
            }
            LossFn::ZeroOne => Ok(if a != b { 1.0 } else { 0.0 }),
            LossFn::Squared => Ok((a - b).powi(2)),
        }
    }

    /// `(numerator, denominator)` added by one test point, or `None` when the
    /// point is skipped.
    pub fn contribution(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        match self {
            LossFn::ScaledL2 => {
                if b.abs() <= EPS_DENOM {
                    None
                } else {
                    Some(((a - b).powi(2) / (b * b), 1.0))
                }
            }
            LossFn::RelativeL2 => Some(((a - b).powi(2), b * b)),
            LossFn::ZeroOne => Some((if a != b { 1.0 } else { 0.0 }, 1.0)),
            LossFn::Squared => Some(((a - b).powi(2), 1.0)),
        }
    }

    /// Smallest admissible denominator sum for one task.
    pub(crate) fn min_denominator(&self) -> f64 {
        match self {
            LossFn::RelativeL2 => EPS_DENOM * EPS_DENOM,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_values() {
        assert_eq!(LossFn::ScaledL2.loss(3.0, 3.0).unwrap(), 0.0);
        assert_eq!(LossFn::ScaledL2.loss(0.0, 5.0).unwrap(), 1.0);
        assert_eq!(LossFn::ZeroOne.loss(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(LossFn::Squared.loss(1.0, 3.0).unwrap(), 4.0);
    }

    #[test]
    fn degenerate_denominator_carries_inputs() {
        let err = LossFn::ScaledL2.loss(0.5, 1e-13).unwrap_err();
        assert_eq!(err, ModelError::DegenerateDenominator { a: 0.5, b: 1e-13 });
        assert!(LossFn::ScaledL2.contribution(0.5, 0.0).is_none());
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_iff_equal(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            prop_assume!(b.abs() > EPS_DENOM);
            for lf in [LossFn::ScaledL2, LossFn::RelativeL2, LossFn::ZeroOne, LossFn::Squared] {
                let l = lf.loss(a, b).unwrap();
                prop_assert!(l >= 0.0);
                prop_assert_eq!(l == 0.0, a == b);
                prop_assert_eq!(lf.loss(b, b).unwrap(), 0.0);
            }
        }

        #[test]
        fn trivial_imitation_scores_one(b in -1e6f64..1e6) {
            prop_assume!(b.abs() > EPS_DENOM);
            prop_assert_eq!(LossFn::ScaledL2.loss(0.0, b).unwrap(), 1.0);
        }
    }
}
