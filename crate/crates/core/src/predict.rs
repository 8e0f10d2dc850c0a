//! Prediction intervals and one-sided threshold tests built on the estimated
//! error law `N(0, δ̂²(m))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{criterion_value, predict_point, Criterion, FitResult, ModelMask};
use crate::oracle::{GaussianLaw, OracleQuantities};
use crate::scalar::Scalar;
use crate::special::{normal_cdf, normal_quantile};

/// `N(0, δ̂²(m))`, flagged when `δ̂ = 0` (zero residual sum of squares).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedLaw<T> {
    pub law: GaussianLaw<T>,
    pub degenerate: bool,
}

pub fn estimated_law<T: Scalar>(fit: &FitResult<T>) -> EstimatedLaw<T> {
    let sd = criterion_value(fit, Criterion::RhoHatSq).max(T::zero()).sqrt();
    EstimatedLaw { law: GaussianLaw { mean: T::zero(), sd }, degenerate: sd == T::zero() }
}

/// `center ± halfwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionInterval<T> {
    pub center: T,
    pub halfwidth: T,
    pub alpha: T,
    pub mask: ModelMask,
    /// Zero halfwidth from a degenerate variance estimate.
    pub degenerate: bool,
}

impl<T: Scalar> PredictionInterval<T> {
    pub fn lower(&self) -> T {
        self.center - self.halfwidth
    }

    pub fn upper(&self) -> T {
        self.center + self.halfwidth
    }

    pub fn contains(&self, y: T) -> bool {
        self.lower() <= y && y <= self.upper()
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Domain { statement: "prediction interval", detail: format!("alpha = {alpha} must lie in (0, 1)") });
    }
    Ok(())
}

/// `q_α`: the `1 − α/2` standard normal quantile.
pub fn two_sided_quantile<T: Scalar>(alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    normal_quantile(T::one() - alpha / T::lit(2.0))
}

/// `ŷ(f)(m) ± q_α δ̂(m)`.
pub fn prediction_interval<T: Scalar>(fit: &FitResult<T>, x_f: &[T], alpha: T) -> Result<PredictionInterval<T>> {
    let q = two_sided_quantile(alpha)?;
    let center = predict_point(fit, x_f)?;
    let est = estimated_law(fit);
    Ok(PredictionInterval { center, halfwidth: q * est.law.sd, alpha, mask: fit.mask.clone(), degenerate: est.degenerate })
}

/// Benchmark interval from the true error law: `ŷ(f)(m) − ν(m) ± q_α δ(m)`.
pub fn infeasible_interval<T: Scalar>(
    truth: &OracleQuantities<T>,
    fit: &FitResult<T>,
    x_f: &[T],
    alpha: T,
) -> Result<PredictionInterval<T>> {
    let q = two_sided_quantile(alpha)?;
    let center = predict_point(fit, x_f)? - truth.nu;
    let sd = truth.delta_sq.max(T::zero()).sqrt();
    Ok(PredictionInterval { center, halfwidth: q * sd, alpha, mask: fit.mask.clone(), degenerate: sd == T::zero() })
}

/// Which side of the threshold the claim about `y(f)` concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdDecision<T> {
    /// Estimated probability that `y(f)` lies on the claimed side of `c`.
    pub p_value: T,
    pub reject: bool,
    pub degenerate: bool,
}

/// Plug-in one-sided test of the claim that `y(f)` lies above (below) `c`.
///
/// With `y(f) ≈ ŷ − e`, `e ~ N(0, δ̂²)`, the p-value is
/// `P(y(f) > c) = Φ((ŷ − c)/δ̂)` for `Above` and `Φ((c − ŷ)/δ̂)` for `Below`;
/// the claim is rejected when it is below `alpha`. Consequently `y_f ∈ I` at
/// level `α` iff neither test at `α/2` with `c = y_f` rejects.
pub fn threshold_test<T: Scalar>(fit: &FitResult<T>, x_f: &[T], c: T, alpha: T, side: Side) -> Result<ThresholdDecision<T>> {
    check_alpha(alpha)?;
    let y_hat = predict_point(fit, x_f)?;
    let est = estimated_law(fit);
    let gap = match side {
        Side::Above => y_hat - c,
        Side::Below => c - y_hat,
    };
    let p_value = if est.degenerate {
        if gap < T::zero() {
            T::zero()
        } else if gap > T::zero() {
            T::one()
        } else {
            T::lit(0.5)
        }
    } else {
        normal_cdf(gap / est.law.sd)
    };
    Ok(ThresholdDecision { p_value, reject: p_value < alpha, degenerate: est.degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::TrainingSample;
    use crate::linalg::Matrix;
    use crate::lsq::fit_model;

    fn fit_with(y: &[f64]) -> FitResult<f64> {
        let x = Matrix::from_fn(y.len(), 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let s = TrainingSample::new(x, y.to_vec()).unwrap();
        fit_model(&s, &ModelMask::intercept_only(1)).unwrap()
    }

    #[test]
    fn interval_shape() {
        let f = fit_with(&[1.0, 3.0, 2.0, 4.0, 5.0]);
        let law = estimated_law(&f);
        assert!((law.law.sd.powi(2) - f.sigma_hat_sq).abs() < 1e-14);
        let i = prediction_interval(&f, &[1.0, 0.0], 0.05).unwrap();
        assert!((i.center - 3.0).abs() < 1e-14);
        assert!((i.halfwidth - 1.959963984540054 * f.sigma_hat_sq.sqrt()).abs() < 1e-12);
        assert!(prediction_interval(&f, &[1.0, 0.0], 1.0).is_err());
        assert!(prediction_interval(&f, &[1.0, 0.0], 0.0).is_err());
        let narrow = prediction_interval(&f, &[1.0, 0.0], 0.999_999).unwrap();
        assert!(narrow.halfwidth < 1e-5);
    }

    #[test]
    fn degenerate_fit() {
        let f = fit_with(&[2.0, 2.0, 2.0, 2.0]);
        let i = prediction_interval(&f, &[1.0, 7.0], 0.1).unwrap();
        assert!(i.degenerate && i.halfwidth == 0.0);
        let t = threshold_test(&f, &[1.0, 0.0], 1.0, 0.05, Side::Above).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(!t.reject);
        let t = threshold_test(&f, &[1.0, 0.0], 1.0, 0.05, Side::Below).unwrap();
        assert_eq!(t.p_value, 0.0);
        assert!(t.reject);
        assert_eq!(threshold_test(&f, &[1.0, 0.0], 2.0, 0.05, Side::Below).unwrap().p_value, 0.5);
    }

    #[test]
    fn threshold_symmetry() {
        let f = fit_with(&[1.0, 3.0, 2.0, 4.0, 5.0]);
        let t = threshold_test(&f, &[1.0, 0.0], 3.0, 0.05, Side::Above).unwrap();
        assert!((t.p_value - 0.5).abs() < 1e-14);
        let i = prediction_interval(&f, &[1.0, 0.0], 0.05).unwrap();
        let at_edge = threshold_test(&f, &[1.0, 0.0], i.lower(), 0.05, Side::Above).unwrap();
        assert!((at_edge.p_value - 0.975).abs() < 1e-12);
        let at_edge = threshold_test(&f, &[1.0, 0.0], i.upper(), 0.05, Side::Above).unwrap();
        assert!((at_edge.p_value - 0.025).abs() < 1e-12);
    }
}
