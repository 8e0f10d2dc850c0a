//! Quantities that require the true data-generating process: the conditional
//! regression of `y` on a model's regressors, the law of the prediction error
//! given the training data, exact coverage and total variation distances, and
//! the sampling law of `δ²(m)`.

use rand::Rng;

use crate::dgp::{Dgp, TrainingSample};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix, PivotedQr};
use crate::lsq::{predict_point, FitResult, ModelMask};
use crate::scalar::Scalar;
use crate::special::{normal_cdf, normal_sf};
use crate::stats::McEstimate;

pub use crate::special::{chi_sq_cdf, f_ratio_cdf};

/// `E[y | z] = zᵀθ`, `z ~ N(η, Γ)`, `Var(y | z) = σ²(m)` for the included
/// regressors `z` (intercept first).
#[derive(Debug, Clone)]
pub struct ConditionalRegression<T> {
    pub mask: ModelMask,
    pub theta: Vec<T>,
    pub eta: Vec<T>,
    /// `Γ`: zero first row and column, `Σ` restricted to the model below.
    pub gamma_cov: Matrix<T>,
    pub sigma_sq_m: T,
}

/// `ν(m)`, `δ²(m)`, `ρ²(m) = ν² + δ²` and `σ²(m)` for one fitted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleQuantities<T> {
    pub nu: T,
    pub delta_sq: T,
    pub rho_sq: T,
    pub sigma_sq_m: T,
}

/// Conditional law `N(ν, δ²)` of `ŷ(f) − y(f)` given the training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionError<T> {
    pub nu: T,
    pub delta_sq: T,
}

impl<T: Scalar> PredictionError<T> {
    pub fn rho_sq(&self) -> T {
        self.nu * self.nu + self.delta_sq
    }

    pub fn law(&self) -> GaussianLaw<T> {
        GaussianLaw { mean: self.nu, sd: self.delta_sq.max(T::zero()).sqrt() }
    }
}

/// Univariate normal law; `sd = 0` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Scalar> GaussianLaw<T> {
    pub fn new(mean: T, sd: T) -> Result<Self> {
        if !(sd >= T::zero()) || !sd.is_finite() || !mean.is_finite() {
            return Err(Error::Domain {
                statement: "Gaussian law",
                detail: format!("need finite mean and sd >= 0, got N({mean}, {sd}^2)"),
            });
        }
        Ok(Self { mean, sd })
    }

    pub fn cdf(&self, x: T) -> T {
        if self.sd == T::zero() {
            return if x >= self.mean { T::one() } else { T::zero() };
        }
        normal_cdf((x - self.mean) / self.sd)
    }
}

pub fn conditional_regression<T: Scalar>(dgp: &Dgp<T>, mask: &ModelMask) -> Result<ConditionalRegression<T>> {
    if mask.p() != dgp.p() {
        return Err(Error::DimensionMismatch { expected: dgp.p() + 1, found: mask.p() + 1 });
    }
    let idx = mask.regressor_indices();
    let k = idx.len() + 1;
    let spec = dgp.spec();
    let mut eta = Vec::with_capacity(k);
    eta.push(T::one());
    eta.extend(idx.iter().map(|&j| spec.gamma[j]));
    let mut gamma_cov = Matrix::zeros(k, k);
    if idx.is_empty() {
        return Ok(ConditionalRegression {
            mask: mask.clone(),
            theta: vec![dgp.mean_y()],
            eta,
            gamma_cov,
            sigma_sq_m: dgp.var_y(),
        });
    }
    let s = dgp.sigma_x().select(&idx);
    let chol = Cholesky::new(&s).map_err(|e| Error::Singular(e.to_string()))?;
    let c: Vec<T> = idx.iter().map(|&j| dgp.cov_xy()[j]).collect();
    let slope = chol.solve(&c);
    let explained = dot(&c, &slope);
    let sigma_u_sq = spec.sigma_u * spec.sigma_u;
    let sigma_sq_m = (dgp.var_y() - explained).max(sigma_u_sq).min(dgp.var_y());
    let mut theta = Vec::with_capacity(k);
    theta.push(dgp.mean_y() - dot(&eta[1..], &slope));
    theta.extend(slope);
    for a in 1..k {
        for b in 1..k {
            gamma_cov[(a, b)] = s[(a - 1, b - 1)];
        }
    }
    Ok(ConditionalRegression { mask: mask.clone(), theta, eta, gamma_cov, sigma_sq_m })
}

/// `ν = ηᵀb`, `δ² = bᵀΓb + σ²(m)` with `b` the least-squares coefficients of
/// `V = Y − Zθ` on the model's columns `Z`.
pub fn oracle_quantities<T: Scalar>(
    cond: &ConditionalRegression<T>,
    sample: &TrainingSample<T>,
    mask: &ModelMask,
) -> Result<OracleQuantities<T>> {
    if *mask != cond.mask {
        return Err(Error::InvalidMask("mask differs from the conditional regression's mask".into()));
    }
    if mask.p() != sample.p() {
        return Err(Error::DimensionMismatch { expected: sample.p() + 1, found: mask.p() + 1 });
    }
    mask.check_size(sample.n())?;
    let cols = mask.indices();
    let x = sample.x();
    let v: Vec<T> = sample
        .y()
        .iter()
        .enumerate()
        .map(|(i, &yi)| {
            let row = x.row(i);
            yi - cols.iter().zip(&cond.theta).map(|(&j, &t)| row[j] * t).sum::<T>()
        })
        .collect();
    let b = PivotedQr::from_columns(x, &cols, &v)?.solve();
    let nu = dot(&cond.eta, &b);
    let delta_sq = cond.gamma_cov.quadratic_form(&b) + cond.sigma_sq_m;
    Ok(OracleQuantities { nu, delta_sq, rho_sq: nu * nu + delta_sq, sigma_sq_m: cond.sigma_sq_m })
}

/// Law of `x_fᵀβ̂ − y_f` computed from `d = β̂ − (β₁, β)`: mean `d₁ + γᵀd₋₁`,
/// variance `d₋₁ᵀΣd₋₁ + σᵤ²`. Agrees with [`oracle_quantities`] and costs
/// `O(p)` for the geometric covariance family.
pub fn prediction_error<T: Scalar>(dgp: &Dgp<T>, beta_hat: &[T]) -> Result<PredictionError<T>> {
    let p = dgp.p();
    if beta_hat.len() != p + 1 {
        return Err(Error::DimensionMismatch { expected: p + 1, found: beta_hat.len() });
    }
    let spec = dgp.spec();
    let d: Vec<T> = beta_hat[1..].iter().zip(&spec.beta).map(|(&a, &b)| a - b).collect();
    let nu = beta_hat[0] - spec.beta0 + dot(&spec.gamma, &d);
    let delta_sq = dgp.sigma_x().quadratic_form(&d) + spec.sigma_u * spec.sigma_u;
    Ok(PredictionError { nu, delta_sq })
}

/// Brute-force `ρ²(m)`: mean squared error of the fitted predictor over fresh
/// future draws, training sample held fixed.
pub fn mc_rho_sq<T: Scalar, R: Rng + ?Sized>(
    dgp: &Dgp<T>,
    fit: &FitResult<T>,
    draws: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if draws < 1000 {
        return Err(Error::Domain { statement: "mc_rho_sq", detail: format!("need at least 1000 draws, got {draws}") });
    }
    let mut x = vec![T::zero(); dgp.p() + 1];
    let mut sq = Vec::with_capacity(draws);
    for _ in 0..draws {
        let y = dgp.draw_future_into(rng, &mut x);
        let e = predict_point(fit, &x)? - y;
        sq.push((e * e).to_f64_lossy());
    }
    Ok(McEstimate::from_values(&sq))
}

/// `E[ρ²(m)] = σ²(m) (n−2)/(n−1−|m|) (1 + 1/n)`.
pub fn expected_rho_sq<T: Scalar>(sigma_sq_m: T, n: usize, size: usize) -> Result<T> {
    if size + 1 >= n {
        return Err(Error::ModelTooLarge { size, n });
    }
    let nf = T::from_count(n);
    Ok(sigma_sq_m * (nf - T::lit(2.0)) / (nf - T::one() - T::from_count(size)) * (T::one() + T::one() / nf))
}

/// `P(|e| ≤ h)` for `e ~ truth`.
pub fn conditional_coverage<T: Scalar>(truth: GaussianLaw<T>, halfwidth: T) -> T {
    let h = halfwidth.max(T::zero());
    let nu = truth.mean.abs();
    if truth.sd == T::zero() {
        return if nu <= h { T::one() } else { T::zero() };
    }
    let d = truth.sd;
    // mass of [−h − ν, h − ν] with ν ≥ 0 folded by symmetry
    let upper = (h - nu) / d;
    let lower = (-h - nu) / d;
    if upper > T::zero() {
        (T::one() - normal_sf(upper) - normal_cdf(lower)).max(T::zero())
    } else {
        (normal_cdf(upper) - normal_cdf(lower)).max(T::zero())
    }
}

/// Exact total variation distance between two univariate normal laws.
pub fn exact_tv_gaussian<T: Scalar>(p: GaussianLaw<T>, q: GaussianLaw<T>) -> T {
    let zero = T::zero();
    let one = T::one();
    if p.sd == zero || q.sd == zero {
        return if p == q { zero } else { one };
    }
    // standardize by q: P = N(a, s²), Q = N(0, 1)
    let a = (p.mean - q.mean) / q.sd;
    let s = p.sd / q.sd;
    let s2 = s * s;
    let log_s2 = s2.ln();
    let two = T::lit(2.0);
    if log_s2.abs() < T::lit(1e-12) {
        return (two * normal_cdf(a.abs() / two) - one).max(zero).min(one);
    }
    // log(p/q) > 0 ⇔ (s²−1)t² + 2at − a² − s² log s² > 0
    let qa = s2 - one;
    let qb = two * a;
    let qc = -a * a - s2 * log_s2;
    let disc = (T::lit(4.0) * s2 * (a * a + qa * log_s2)).max(zero);
    let sign_b = if qb >= zero { one } else { -one };
    let qq = -(qb + sign_b * disc.sqrt()) / two;
    let r1 = qq / qa;
    let r2 = qc / qq;
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let tv = if s > one {
        (normal_cdf((lo - a) / s) - normal_cdf(lo)) + (normal_sf((hi - a) / s) - normal_sf(hi))
    } else {
        (normal_cdf((hi - a) / s) - normal_cdf((lo - a) / s)) - (normal_cdf(hi) - normal_cdf(lo))
    };
    tv.max(zero).min(one)
}

/// CDF of `σ²(m)(1 + χ²_{|m|−1}/χ²_{n−|m|+1})` with independent chi-squares.
pub fn delta_sq_cdf<T: Scalar>(t: T, sigma_sq_m: T, n: usize, size: usize) -> Result<T> {
    if size == 0 || size > n {
        return Err(Error::Domain {
            statement: "delta_sq_cdf",
            detail: format!("need 1 <= |m| <= n, got |m| = {size}, n = {n}"),
        });
    }
    if !(sigma_sq_m > T::zero()) {
        return Err(Error::Domain { statement: "delta_sq_cdf", detail: format!("sigma^2(m) = {sigma_sq_m} must be positive") });
    }
    if t < sigma_sq_m {
        return Ok(T::zero());
    }
    let a = size - 1;
    if a == 0 {
        return Ok(T::one());
    }
    let b = n - size + 1;
    f_ratio_cdf((t / sigma_sq_m - T::one()) * T::from_count(b) / T::from_count(a), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{Covariance, DgpSpec};

    fn law(m: f64, s: f64) -> GaussianLaw<f64> {
        GaussianLaw::new(m, s).unwrap()
    }

    #[test]
    fn tv_closed_forms() {
        assert_eq!(exact_tv_gaussian(law(1.0, 2.0), law(1.0, 2.0)), 0.0);
        let v = exact_tv_gaussian(law(2.0, 1.0), law(0.0, 1.0));
        assert!((v - 0.6826894921370859).abs() < 1e-12);
        let e = std::f64::consts::E;
        let v = exact_tv_gaussian(law(0.0, e.sqrt()), law(0.0, 1.0));
        assert!((v - 0.2370623619028399).abs() < 1e-12);
        let w = exact_tv_gaussian(law(0.0, 1.0), law(0.0, e.sqrt()));
        assert!((v - w).abs() < 1e-13);
        assert_eq!(exact_tv_gaussian(law(0.0, 0.0), law(0.0, 1.0)), 1.0);
        assert_eq!(exact_tv_gaussian(law(0.0, 0.0), law(0.0, 0.0)), 0.0);
    }

    #[test]
    fn coverage_values() {
        let q = 1.959963984540054;
        assert!((conditional_coverage(law(0.0, 1.0), q) - 0.95).abs() < 1e-12);
        assert!((conditional_coverage(law(0.0, 1.0), 1.96 * 1.1) - 0.9689163348441969).abs() < 1e-12);
        assert!((conditional_coverage(law(1.0, 1.0), 1.96) - 0.8299341973214241).abs() < 1e-12);
        assert!((conditional_coverage(law(-1.0, 1.0), 1.96) - 0.8299341973214241).abs() < 1e-12);
        assert_eq!(conditional_coverage(law(0.5, 0.0), 0.5), 1.0);
        assert_eq!(conditional_coverage(law(0.6, 0.0), 0.5), 0.0);
    }

    #[test]
    fn expected_rho_sq_arithmetic() {
        assert!((expected_rho_sq(1.0f64, 10, 1).unwrap() - 1.1).abs() < 1e-14);
        assert!((expected_rho_sq(1.0f64, 100, 10).unwrap() - 9898.0 / 8900.0).abs() < 1e-14);
        assert!((expected_rho_sq(2.0f64, 50, 25).unwrap() - 4.08).abs() < 1e-13);
        assert!(expected_rho_sq(1.0, 10, 9).is_err());
    }

    #[test]
    fn delta_sq_cdf_support() {
        assert_eq!(delta_sq_cdf(0.99, 1.0, 10, 1).unwrap(), 0.0);
        assert_eq!(delta_sq_cdf(1.0, 1.0, 10, 1).unwrap(), 1.0);
        assert_eq!(delta_sq_cdf(0.5, 1.0, 60, 15).unwrap(), 0.0);
        let mid = delta_sq_cdf(1.3, 1.0, 60, 15).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        assert!(delta_sq_cdf(1.3, 1.0, 10, 11).is_err());
    }

    #[test]
    fn conditional_regression_cases() {
        let spec: DgpSpec<f64> = DgpSpec {
            p: 2,
            beta0: 0.5,
            beta: vec![2.0, 0.0],
            gamma: vec![1.0, -1.0],
            sigma_x: Covariance::identity(),
            sigma_u: 1.0,
        };
        let dgp = spec.build().unwrap();
        let only2 = ModelMask::from_indices(2, &[2]).unwrap();
        let c = conditional_regression(&dgp, &only2).unwrap();
        assert!((c.sigma_sq_m - 5.0).abs() < 1e-14);
        let full = conditional_regression(&dgp, &ModelMask::full(2)).unwrap();
        assert!((full.sigma_sq_m - 1.0).abs() < 1e-14);
        assert!((full.theta[0] - 0.5).abs() < 1e-14 && (full.theta[1] - 2.0).abs() < 1e-14);
        let io = conditional_regression(&dgp, &ModelMask::intercept_only(2)).unwrap();
        assert_eq!(io.theta, vec![2.5]);
        assert_eq!(io.sigma_sq_m, 5.0);
        assert_eq!(full.eta, vec![1.0, 1.0, -1.0]);
        assert!(full.gamma_cov.row(0).iter().all(|&v| v == 0.0));
    }
}
