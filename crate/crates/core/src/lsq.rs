//! Restricted least-squares fits of candidate models and the RSS-based
//! performance criteria.

use serde::{Deserialize, Serialize};

use crate::dgp::TrainingSample;
use crate::error::{Error, Result};
use crate::linalg::{dot, PivotedQr};
use crate::scalar::Scalar;

/// Candidate model: an inclusion mask over `(intercept, x₁, …, x_p)` with the
/// intercept always included.
///
/// Ordering is lexicographic on `include` with `false < true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<bool>", into = "Vec<bool>")]
pub struct ModelMask {
    include: Vec<bool>,
}

impl TryFrom<Vec<bool>> for ModelMask {
    type Error = Error;
    fn try_from(include: Vec<bool>) -> Result<Self> {
        ModelMask::new(include)
    }
}

impl From<ModelMask> for Vec<bool> {
    fn from(m: ModelMask) -> Self {
        m.include
    }
}

impl ModelMask {
    pub fn new(include: Vec<bool>) -> Result<Self> {
        match include.first() {
            Some(true) => Ok(Self { include }),
            Some(false) => Err(Error::InvalidMask("the intercept (position 0) must be included".into())),
            None => Err(Error::InvalidMask("empty mask".into())),
        }
    }

    /// Mask over `p` regressors including the intercept and the listed
    /// positions (1-based regressor positions; 0 is the intercept and may be listed).
    pub fn from_indices(p: usize, idx: &[usize]) -> Result<Self> {
        let mut include = vec![false; p + 1];
        include[0] = true;
        for &j in idx {
            if j > p {
                return Err(Error::InvalidMask(format!("position {j} exceeds p = {p}")));
            }
            include[j] = true;
        }
        Ok(Self { include })
    }

    pub fn intercept_only(p: usize) -> Self {
        let mut include = vec![false; p + 1];
        include[0] = true;
        Self { include }
    }

    pub fn full(p: usize) -> Self {
        Self { include: vec![true; p + 1] }
    }

    /// First `k` coefficients (intercept plus `x₁..x_{k-1}`).
    pub fn leading(p: usize, k: usize) -> Result<Self> {
        if k == 0 || k > p + 1 {
            return Err(Error::InvalidMask(format!("leading size {k} outside 1..={}", p + 1)));
        }
        Ok(Self { include: (0..=p).map(|j| j < k).collect() })
    }

    /// Number of non-intercept regressors the mask ranges over.
    pub fn p(&self) -> usize {
        self.include.len() - 1
    }

    /// `|m|`: number of included coefficients, intercept counted.
    pub fn size(&self) -> usize {
        self.include.iter().filter(|&&b| b).count()
    }

    pub fn include(&self) -> &[bool] {
        &self.include
    }

    pub fn contains(&self, j: usize) -> bool {
        self.include.get(j).copied().unwrap_or(false)
    }

    /// Included positions in increasing order; always starts with 0.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.include.len()).filter(|&j| self.include[j]).collect()
    }

    /// Included non-intercept regressors as 0-based indices into `x₁..x_p`.
    pub fn regressor_indices(&self) -> Vec<usize> {
        (1..self.include.len()).filter(|&j| self.include[j]).map(|j| j - 1).collect()
    }

    pub fn is_subset_of(&self, other: &ModelMask) -> bool {
        self.include.len() == other.include.len()
            && self.include.iter().zip(&other.include).all(|(&a, &b)| !a || b)
    }

    /// Copy with position `j` set to `on`; the intercept cannot be removed.
    pub fn with(&self, j: usize, on: bool) -> Result<Self> {
        if j == 0 && !on {
            return Err(Error::InvalidMask("the intercept cannot be removed".into()));
        }
        if j > self.p() {
            return Err(Error::InvalidMask(format!("position {j} exceeds p = {}", self.p())));
        }
        let mut include = self.include.clone();
        include[j] = on;
        Ok(Self { include })
    }

    /// Checks `|m| < n − 1`.
    pub fn check_size(&self, n: usize) -> Result<()> {
        let size = self.size();
        if size + 1 >= n {
            return Err(Error::ModelTooLarge { size, n });
        }
        Ok(())
    }

    fn check_against(&self, sample_p: usize, n: usize) -> Result<()> {
        if self.p() != sample_p {
            return Err(Error::DimensionMismatch { expected: sample_p + 1, found: self.include.len() });
        }
        self.check_size(n)
    }
}

/// Least-squares fit of one candidate model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub mask: ModelMask,
    /// Length `p + 1`; zero at excluded positions.
    pub beta_hat: Vec<T>,
    pub rss: T,
    pub n: usize,
    /// `RSS / (n − |m|)`.
    pub sigma_hat_sq: T,
    /// The included columns were numerically collinear; `beta_hat` is then the
    /// minimum-norm solution.
    pub rank_deficient: bool,
}

/// Performance criteria derived from `σ̂²(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `σ̂²`.
    SigmaHatSq,
    /// `σ̂² n/(n+1−|m|)`; also the variance estimator `δ̂²`.
    RhoHatSq,
    /// `σ̂² (n−2)/(n−1−|m|) (1+1/n)`.
    RhoCheckSq,
    /// `σ̂² n/(n−|m|)`.
    Gcv,
    /// `σ̂² (n−2)/(n−1−|m|)`.
    Sp,
    /// Same value as `Sp`.
    DeltaCheckSq,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::SigmaHatSq,
        Criterion::RhoHatSq,
        Criterion::RhoCheckSq,
        Criterion::Gcv,
        Criterion::Sp,
        Criterion::DeltaCheckSq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::SigmaHatSq => "sigma_hat_sq",
            Criterion::RhoHatSq => "rho_hat_sq",
            Criterion::RhoCheckSq => "rho_check_sq",
            Criterion::Gcv => "gcv",
            Criterion::Sp => "sp",
            Criterion::DeltaCheckSq => "delta_check_sq",
        }
    }

    /// Multiplier applied to `σ̂²`. Requires `size + 1 < n`.
    pub fn factor<T: Scalar>(self, n: usize, size: usize) -> T {
        let nf = T::from_count(n);
        let k = T::from_count(size);
        let one = T::one();
        let two = T::lit(2.0);
        match self {
            Criterion::SigmaHatSq => one,
            Criterion::RhoHatSq => nf / (nf + one - k),
            Criterion::Gcv => nf / (nf - k),
            Criterion::Sp | Criterion::DeltaCheckSq => (nf - two) / (nf - one - k),
            Criterion::RhoCheckSq => (nf - two) / (nf - one - k) * (one + one / nf),
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown criterion {s:?}")))
    }
}

/// Criterion value from `RSS`, `n` and `|m|` alone.
pub fn criterion_from_rss<T: Scalar>(kind: Criterion, rss: T, n: usize, size: usize) -> T {
    let sigma_hat_sq = rss / T::from_count(n - size);
    sigma_hat_sq * kind.factor(n, size)
}

pub fn criterion_value<T: Scalar>(fit: &FitResult<T>, kind: Criterion) -> T {
    fit.sigma_hat_sq * kind.factor(fit.n, fit.mask.size())
}

fn qr_for<T: Scalar>(sample: &TrainingSample<T>, mask: &ModelMask) -> Result<PivotedQr<T>> {
    mask.check_against(sample.p(), sample.n())?;
    PivotedQr::from_columns(sample.x(), &mask.indices(), sample.y())
}

/// Fits `Y` on the included columns of `X`.
pub fn fit_model<T: Scalar>(sample: &TrainingSample<T>, mask: &ModelMask) -> Result<FitResult<T>> {
    let qr = qr_for(sample, mask)?;
    let coef = qr.solve();
    let mut beta_hat = vec![T::zero(); mask.p() + 1];
    for (j, c) in mask.indices().into_iter().zip(coef) {
        beta_hat[j] = c;
    }
    // Residuals from the coefficients, not the QR remainder, so that RSS is the
    // attained minimum of exactly the returned solution.
    let x = sample.x();
    let mut rss = T::zero();
    for (i, &yi) in sample.y().iter().enumerate() {
        let r = yi - dot(x.row(i), &beta_hat);
        rss += r * r;
    }
    let n = sample.n();
    let sigma_hat_sq = rss / T::from_count(n - mask.size());
    Ok(FitResult { mask: mask.clone(), beta_hat, rss, n, sigma_hat_sq, rank_deficient: qr.is_rank_deficient() })
}

/// RSS without back-substitution.
pub fn fit_rss<T: Scalar>(sample: &TrainingSample<T>, mask: &ModelMask) -> Result<T> {
    Ok(qr_for(sample, mask)?.rss())
}

/// `x_fᵀ β̂(m)`; `x_f` has length `p + 1` with a leading 1.
pub fn predict_point<T: Scalar>(fit: &FitResult<T>, x_f: &[T]) -> Result<T> {
    if x_f.len() != fit.beta_hat.len() {
        return Err(Error::DimensionMismatch { expected: fit.beta_hat.len(), found: x_f.len() });
    }
    if x_f[0] != T::one() {
        return Err(Error::InvalidSample("future regressor row must start with the intercept value 1".into()));
    }
    Ok(dot(x_f, &fit.beta_hat))
}
