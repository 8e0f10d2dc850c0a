//! Gaussian random-design linear model `y = β₁ + Σⱼ xⱼβⱼ + u`, truncated to
//! `p` non-intercept regressors, and its sampling.
//!
//! Non-intercept regressors are `N(γ, Σ)`; the error `u ~ N(0, σᵤ²)` is
//! independent of them. Coefficients beyond `p` are exactly zero.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::rng::{derive_seed, substream, tag};
use crate::scalar::Scalar;

/// Covariance of the non-intercept regressors.
///
/// Serialized as `{"family": "geometric", "r": 0.5}` (entries `r^|j-k|`) or
/// `{"family": "dense", "lower": [[s11], [s21, s22], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Covariance<T> {
    Geometric { r: T },
    Dense { lower: Vec<Vec<T>> },
}

impl<T: Scalar> Covariance<T> {
    pub fn identity() -> Self {
        Covariance::Geometric { r: T::zero() }
    }

    pub fn entry(&self, j: usize, k: usize) -> T {
        match self {
            Covariance::Geometric { r } => {
                let d = j.abs_diff(k);
                if d == 0 {
                    T::one()
                } else {
                    r.powi(d as i32)
                }
            }
            Covariance::Dense { lower } => {
                if j >= k {
                    lower[j][k]
                } else {
                    lower[k][j]
                }
            }
        }
    }

    /// Dense `p × p` materialization.
    pub fn to_matrix(&self, p: usize) -> Matrix<T> {
        Matrix::from_fn(p, p, |j, k| self.entry(j, k))
    }

    /// Principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> Matrix<T> {
        Matrix::from_fn(idx.len(), idx.len(), |a, b| self.entry(idx[a], idx[b]))
    }

    /// `Σ x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let p = x.len();
        match self {
            Covariance::Geometric { r } => {
                // two first-order recursions: O(p)
                let r = *r;
                let mut fwd = vec![T::zero(); p];
                let mut acc = T::zero();
                for j in 0..p {
                    acc = x[j] + r * acc;
                    fwd[j] = acc;
                }
                let mut out = fwd;
                acc = T::zero();
                for j in (0..p).rev() {
                    acc = x[j] + r * acc;
                    out[j] += acc - x[j];
                }
                out
            }
            Covariance::Dense { lower } => (0..p)
                .map(|j| {
                    let mut s = T::zero();
                    for (k, &xk) in x.iter().enumerate() {
                        s += if j >= k { lower[j][k] } else { lower[k][j] } * xk;
                    }
                    s
                })
                .collect(),
        }
    }

    /// `xᵀ Σ x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        dot(x, &self.mul_vec(x))
    }

    fn validate(&self, p: usize) -> Result<Option<Cholesky<T>>> {
        match self {
            Covariance::Geometric { r } => {
                if !r.is_finite() || r.abs() >= T::one() {
                    return Err(Error::InvalidSpec(format!(
                        "geometric covariance needs |r| < 1 to be positive definite, got r = {r}"
                    )));
                }
                Ok(None)
            }
            Covariance::Dense { lower } => {
                if lower.len() != p {
                    return Err(Error::DimensionMismatch { expected: p, found: lower.len() });
                }
                for (i, row) in lower.iter().enumerate() {
                    if row.len() != i + 1 {
                        return Err(Error::InvalidSpec(format!(
                            "row {i} of the lower triangle has {} entries, expected {}",
                            row.len(),
                            i + 1
                        )));
                    }
                    if row.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidSpec(format!("non-finite covariance entry in row {i}")));
                    }
                }
                Cholesky::new(&self.to_matrix(p)).map(Some)
            }
        }
    }
}

/// Parameters `(β₁, β, γ, Σ, σᵤ)` of the data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec<T> {
    pub p: usize,
    /// Intercept coefficient.
    pub beta0: T,
    pub beta: Vec<T>,
    pub gamma: Vec<T>,
    pub sigma_x: Covariance<T>,
    pub sigma_u: T,
}

/// Validated data-generating process with precomputed moments.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct Dgp<T> {
    spec: DgpSpec<T>,
    chol: Option<Cholesky<T>>,
    cov_xy: Vec<T>,
    signal_var: T,
    var_y: T,
    mean_y: T,
}

/// One training sample: `x` is `n × (p+1)` with a leading column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample<T> {
    x: Matrix<T>,
    y: Vec<T>,
}

/// An independent future draw `(x_f, y_f)`; `x[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureDraw<T> {
    pub x: Vec<T>,
    pub y: T,
}

impl<T: Scalar> DgpSpec<T> {
    /// Validates the parameters and precomputes `Var(y)`, `Σβ` and `E[y]`.
    pub fn build(self) -> Result<Dgp<T>> {
        Dgp::new(self)
    }
}

impl<T: Scalar> Dgp<T> {
    pub fn new(spec: DgpSpec<T>) -> Result<Self> {
        let p = spec.p;
        if p == 0 {
            return Err(Error::InvalidSpec("need at least one non-intercept regressor".into()));
        }
        if spec.beta.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: spec.beta.len() });
        }
        if spec.gamma.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: spec.gamma.len() });
        }
        if !(spec.sigma_u > T::zero()) || !spec.sigma_u.is_finite() {
            return Err(Error::InvalidSpec(format!("sigma_u must be positive, got {}", spec.sigma_u)));
        }
        if !spec.beta0.is_finite()
            || spec.beta.iter().chain(&spec.gamma).any(|v| !v.is_finite())
        {
            return Err(Error::InvalidSpec("non-finite coefficient or mean".into()));
        }
        let chol = spec.sigma_x.validate(p)?;
        let cov_xy = spec.sigma_x.mul_vec(&spec.beta);
        let signal_var = dot(&spec.beta, &cov_xy);
        let var_y = signal_var + spec.sigma_u * spec.sigma_u;
        let mean_y = spec.beta0 + dot(&spec.gamma, &spec.beta);
        Ok(Self { spec, chol, cov_xy, signal_var, var_y, mean_y })
    }

    pub fn spec(&self) -> &DgpSpec<T> {
        &self.spec
    }

    pub fn p(&self) -> usize {
        self.spec.p
    }

    /// `Var(y) = βᵀΣβ + σᵤ²`.
    pub fn var_y(&self) -> T {
        self.var_y
    }

    /// `Cov(x, y) = Σβ` over the non-intercept regressors.
    pub fn cov_xy(&self) -> &[T] {
        &self.cov_xy
    }

    /// `E[y] = β₁ + γᵀβ`.
    pub fn mean_y(&self) -> T {
        self.mean_y
    }

    /// `(Var(y) - Var(u)) / Var(u)`.
    pub fn snr(&self) -> T {
        self.signal_var / (self.spec.sigma_u * self.spec.sigma_u)
    }

    pub fn sigma_x(&self) -> &Covariance<T> {
        &self.spec.sigma_x
    }

    /// Full coefficient vector `(β₁, β)` of length `p + 1`.
    pub fn full_beta(&self) -> Vec<T> {
        let mut b = Vec::with_capacity(self.p() + 1);
        b.push(self.spec.beta0);
        b.extend_from_slice(&self.spec.beta);
        b
    }

    /// Fills `x` (length `p`) with one regressor draw and returns the response.
    fn draw_row<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [T]) -> T {
        let p = self.p();
        for v in x.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = T::lit(z);
        }
        match (&self.spec.sigma_x, &self.chol) {
            (Covariance::Geometric { r }, _) => {
                // AR(1) recursion is the exact Cholesky factor of r^|j-k|.
                let scale = (T::one() - *r * *r).sqrt();
                for j in 1..p {
                    x[j] = *r * x[j - 1] + scale * x[j];
                }
            }
            (Covariance::Dense { .. }, Some(ch)) => {
                let l = ch.factor();
                for j in (0..p).rev() {
                    let row = l.row(j);
                    x[j] = dot(&row[..=j], &x[..=j]);
                }
            }
            (Covariance::Dense { .. }, None) => unreachable!("dense covariance is always factored"),
        }
        for (v, &g) in x.iter_mut().zip(&self.spec.gamma) {
            *v += g;
        }
        let u: f64 = rng.sample(StandardNormal);
        self.spec.beta0 + dot(x, &self.spec.beta) + self.spec.sigma_u * T::lit(u)
    }

    /// Draws `n` i.i.d. rows. Per row the generator yields `p` normals for the
    /// regressors followed by one for the error.
    pub fn sample_training<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<TrainingSample<T>> {
        if n < 3 {
            return Err(Error::InvalidSample(format!("need n >= 3, got {n}")));
        }
        let p = self.p();
        let mut x = Matrix::zeros(n, p + 1);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let row = x.row_mut(i);
            row[0] = T::one();
            y.push(self.draw_row(rng, &mut row[1..]));
        }
        Ok(TrainingSample { x, y })
    }

    /// Draws `count` future observations from the same law as the training rows.
    pub fn sample_future<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<FutureDraw<T>> {
        let p = self.p();
        (0..count)
            .map(|_| {
                let mut x = vec![T::zero(); p + 1];
                x[0] = T::one();
                let y = self.draw_row(rng, &mut x[1..]);
                FutureDraw { x, y }
            })
            .collect()
    }

    /// Draws a single future observation into `x` (length `p + 1`), returning `y`.
    pub fn draw_future_into<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [T]) -> T {
        x[0] = T::one();
        self.draw_row(rng, &mut x[1..])
    }
}

impl<T: Scalar> TrainingSample<T> {
    /// Wraps a design matrix (leading column of ones) and response vector.
    pub fn new(x: Matrix<T>, y: Vec<T>) -> Result<Self> {
        let n = x.rows();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        if n < 3 {
            return Err(Error::InvalidSample(format!("need n >= 3, got {n}")));
        }
        if x.cols() < 1 {
            return Err(Error::InvalidSample("design has no columns".into()));
        }
        if let Some(i) = (0..n).find(|&i| x[(i, 0)] != T::one()) {
            return Err(Error::InvalidSample(format!("row {i} of the intercept column is not 1")));
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite value in sample".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// Number of non-intercept regressors.
    pub fn p(&self) -> usize {
        self.x.cols() - 1
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// Copy with the response multiplied by `c`.
    pub fn scale_response(&self, c: T) -> Self {
        Self { x: self.x.clone(), y: self.y.iter().map(|&v| v * c).collect() }
    }
}

/// ARCH(1) parameters: `βⱼ = sⱼ zⱼ`, `sⱼ² = ω + α βⱼ₋₁²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchParams {
    pub omega: f64,
    pub alpha: f64,
}

impl ArchParams {
    /// Long near-zero stretches interrupted by a few large groups.
    pub const SPARSE: ArchParams = ArchParams { omega: 0.01, alpha: 0.97 };
    /// Persistently non-negligible values.
    pub const NONSPARSE: ArchParams = ArchParams { omega: 0.5, alpha: 0.5 };

    fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidSpec(format!("ARCH omega must be positive, got {}", self.omega)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidSpec(format!(
                "ARCH alpha must lie in [0, 1) for stationarity, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Coefficient sequence drawn from an ARCH(1) recursion started at zero.
pub fn generate_beta_arch<T: Scalar>(length: usize, seed: u64, params: ArchParams) -> Result<Vec<T>> {
    params.validate()?;
    if length == 0 {
        return Err(Error::InvalidSpec("ARCH sequence length must be >= 1".into()));
    }
    let mut rng = substream(seed, 0);
    let mut prev = 0.0f64;
    Ok((0..length)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            prev = (params.omega + params.alpha * prev * prev).sqrt() * z;
            T::lit(prev)
        })
        .collect())
}

/// Rescales `beta` so that `βᵀΣβ / σᵤ² = target_snr`.
pub fn scale_to_snr<T: Scalar>(beta: &[T], sigma_x: &Covariance<T>, sigma_u: T, target_snr: T) -> Result<Vec<T>> {
    if !(target_snr > T::zero()) {
        return Err(Error::InvalidSpec(format!("target snr must be positive, got {target_snr}")));
    }
    if !(sigma_u > T::zero()) {
        return Err(Error::InvalidSpec(format!("sigma_u must be positive, got {sigma_u}")));
    }
    let signal = sigma_x.quadratic_form(beta);
    if !(signal > T::zero()) {
        return Err(Error::InvalidSpec("cannot rescale an all-zero coefficient vector".into()));
    }
    let c = (target_snr * sigma_u * sigma_u / signal).sqrt();
    Ok(beta.iter().map(|&b| b * c).collect())
}

/// Rescales `gamma` so that `γᵀβ = target`.
pub fn scale_means<T: Scalar>(gamma: &[T], beta: &[T], target: T) -> Result<Vec<T>> {
    if gamma.len() != beta.len() {
        return Err(Error::DimensionMismatch { expected: beta.len(), found: gamma.len() });
    }
    let cur = dot(gamma, beta);
    if cur == T::zero() || !cur.is_finite() {
        return Err(Error::InvalidSpec("gamma'beta = 0 cannot be rescaled".into()));
    }
    if target == T::zero() {
        return Err(Error::InvalidSpec("target 0 is unreachable by rescaling when gamma'beta != 0".into()));
    }
    let c = target / cur;
    Ok(gamma.iter().map(|&g| g * c).collect())
}

/// Sparse or nonsparse coefficient pattern of the block-selection study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sparsity {
    Sparse,
    Nonsparse,
}

impl Sparsity {
    pub fn arch(self) -> ArchParams {
        match self {
            Sparsity::Sparse => ArchParams::SPARSE,
            Sparsity::Nonsparse => ArchParams::NONSPARSE,
        }
    }
}

/// Design of the block-selection simulation: ARCH coefficients rescaled to a
/// signal-to-noise ratio, geometric covariance, standard normal means
/// rescaled so that `γᵀβ` hits a target, zero intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStudyDesign {
    pub sparsity: Sparsity,
    pub blocks: usize,
    pub width: usize,
    #[serde(default = "default_snr")]
    pub snr: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_mean_target")]
    pub mean_target: f64,
    #[serde(default = "default_sigma_u")]
    pub sigma_u: f64,
    /// Seed for the coefficient and mean draws (not the training data).
    pub seed: u64,
    /// Overrides the ARCH parameters implied by `sparsity`.
    #[serde(default)]
    pub arch: Option<ArchParams>,
}

fn default_snr() -> f64 {
    5.0
}
fn default_r() -> f64 {
    0.5
}
fn default_mean_target() -> f64 {
    std::f64::consts::SQRT_2
}
fn default_sigma_u() -> f64 {
    1.0
}

impl BlockStudyDesign {
    pub fn new(sparsity: Sparsity, blocks: usize, width: usize, seed: u64) -> Self {
        Self {
            sparsity,
            blocks,
            width,
            snr: default_snr(),
            r: default_r(),
            mean_target: default_mean_target(),
            sigma_u: default_sigma_u(),
            seed,
            arch: None,
        }
    }

    pub fn p(&self) -> usize {
        self.blocks * self.width
    }

    /// Coefficients are scaled to the snr first, then the means to `γᵀβ`;
    /// mean scaling leaves the variance-based snr untouched.
    pub fn to_spec<T: Scalar>(&self) -> Result<DgpSpec<T>> {
        let p = self.p();
        if p == 0 {
            return Err(Error::InvalidSpec("block design has no regressors".into()));
        }
        let sigma_x = Covariance::Geometric { r: T::lit(self.r) };
        let sigma_u = T::lit(self.sigma_u);
        let raw: Vec<T> = generate_beta_arch(p, derive_seed(self.seed, tag::BETA), self.arch.unwrap_or(self.sparsity.arch()))?;
        let beta = scale_to_snr(&raw, &sigma_x, sigma_u, T::lit(self.snr))?;
        let mut rng = substream(derive_seed(self.seed, tag::GAMMA), 0);
        let gamma_raw: Vec<T> = (0..p)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(z)
            })
            .collect();
        let gamma = scale_means(&gamma_raw, &beta, T::lit(self.mean_target))?;
        Ok(DgpSpec { p, beta0: T::zero(), beta, gamma, sigma_x, sigma_u })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn iid_spec(beta: Vec<f64>, sigma_u: f64) -> DgpSpec<f64> {
        let p = beta.len();
        DgpSpec { p, beta0: 0.0, beta, gamma: vec![0.0; p], sigma_x: Covariance::identity(), sigma_u }
    }

    #[test]
    fn moments_from_spec() {
        let d = iid_spec(vec![0.0], 1.5).build().unwrap();
        assert_eq!(d.var_y(), 2.25);
        let d = iid_spec(vec![1.0, 1.0], 1.0).build().unwrap();
        assert!((d.var_y() - 3.0).abs() < 1e-15);
        let spec: DgpSpec<f64> = DgpSpec {
            p: 2,
            beta0: 0.5,
            beta: vec![1.0, -2.0],
            gamma: vec![3.0, 1.0],
            sigma_x: Covariance::Geometric { r: 0.5 },
            sigma_u: 1.0,
        };
        let d = spec.build().unwrap();
        assert!((d.mean_y() - 1.5).abs() < 1e-15);
        // Σβ = (1 - 1, 0.5 - 2)
        assert!((d.cov_xy()[0] - 0.0).abs() < 1e-15);
        assert!((d.cov_xy()[1] + 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = iid_spec(vec![1.0], 1.0);
        s.sigma_u = 0.0;
        assert!(matches!(s.build(), Err(Error::InvalidSpec(_))));
        let s = DgpSpec {
            p: 2,
            beta0: 0.0,
            beta: vec![1.0, 1.0],
            gamma: vec![0.0, 0.0],
            sigma_x: Covariance::Dense { lower: vec![vec![1.0], vec![2.0, 1.0]] },
            sigma_u: 1.0,
        };
        assert!(matches!(s.build(), Err(Error::NotPositiveDefinite { .. })));
        let mut s = iid_spec(vec![1.0], 1.0);
        s.sigma_x = Covariance::Geometric { r: 1.0 };
        assert!(s.build().is_err());
    }

    #[test]
    fn geometric_mul_matches_dense() {
        let cov = Covariance::Geometric { r: 0.7f64 };
        let x: Vec<f64> = (0..9).map(|i| (i as f64).cos()).collect();
        let fast = cov.mul_vec(&x);
        let dense = cov.to_matrix(9).mat_vec(&x);
        for (a, b) in fast.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = iid_spec(vec![1.0, 2.0, 3.0], 1.0).build().unwrap();
        let a = d.sample_training(10, &mut substream(5, 1)).unwrap();
        let b = d.sample_training(10, &mut substream(5, 1)).unwrap();
        assert_eq!(a, b);
        assert!(d.sample_training(2, &mut substream(5, 1)).is_err());
        assert!(d.sample_future(0, &mut substream(5, 1)).is_empty());
    }

    #[test]
    fn snr_scaling() {
        let cov = Covariance::<f64>::identity();
        let b = scale_to_snr(&[1.0, 0.0, 0.0], &cov, 1.0, 5.0).unwrap();
        assert!((b[0] - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(&b[1..], &[0.0, 0.0]);
        let again = scale_to_snr(&b, &cov, 1.0, 5.0).unwrap();
        assert!((again[0] - b[0]).abs() < 1e-15);
        let doubled = scale_to_snr(&b, &cov, 2.0, 5.0).unwrap();
        assert!((doubled[0] - 2.0 * b[0]).abs() < 1e-14);
        assert!(scale_to_snr(&[0.0, 0.0], &cov, 1.0, 5.0).is_err());
    }

    #[test]
    fn mean_scaling() {
        let g = scale_means(&[1.0, 1.0], &[1.0, 1.0], std::f64::consts::SQRT_2).unwrap();
        assert!((g[0] - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        let same = scale_means(&[1.0, 0.5], &[1.0, 2.0], 2.0).unwrap();
        assert_eq!(same, vec![1.0, 0.5]);
        assert!(scale_means(&[1.0, 1.0], &[1.0, 1.0], 0.0).is_err());
        assert!(scale_means(&[1.0, -1.0], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn arch_behaviour() {
        let a: Vec<f64> = generate_beta_arch(50, 3, ArchParams::SPARSE).unwrap();
        let b: Vec<f64> = generate_beta_arch(50, 3, ArchParams::SPARSE).unwrap();
        assert_eq!(a, b);
        assert!(generate_beta_arch::<f64>(10, 3, ArchParams { omega: 1.0, alpha: 1.0 }).is_err());
        assert!(generate_beta_arch::<f64>(10, 3, ArchParams { omega: 0.0, alpha: 0.5 }).is_err());
        // alpha = 0: i.i.d. N(0, omega)
        let iid: Vec<f64> = generate_beta_arch(20_000, 9, ArchParams { omega: 4.0, alpha: 0.0 }).unwrap();
        let var = iid.iter().map(|v| v * v).sum::<f64>() / iid.len() as f64;
        assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0f64 / 20_000.0).sqrt());
    }

    #[test]
    fn block_design_hits_targets() {
        let design = BlockStudyDesign::new(Sparsity::Sparse, 5, 4, 11);
        let spec: DgpSpec<f64> = design.to_spec().unwrap();
        let d = spec.build().unwrap();
        assert!((d.snr() - 5.0).abs() < 1e-12);
        let gb = dot(&d.spec().gamma, &d.spec().beta);
        assert!((gb - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn spec_json_roundtrip_shape() {
        let s: DgpSpec<f64> = serde_json::from_str(
            r#"{"p":2,"beta0":0.0,"beta":[1.0,0.5],"gamma":[0.0,1.0],
                "sigma_x":{"family":"dense","lower":[[1.0],[0.3,2.0]]},"sigma_u":1.0}"#,
        )
        .unwrap();
        assert_eq!(s.sigma_x.entry(0, 1), 0.3);
        let g: Covariance<f64> = serde_json::from_str(r#"{"family":"geometric","r":0.5}"#).unwrap();
        assert_eq!(g.entry(0, 2), 0.25);
    }
}
