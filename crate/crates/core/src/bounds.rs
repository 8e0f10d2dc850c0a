//! Finite-sample probability bounds, the auxiliary inequalities behind them,
//! and Monte Carlo checks of each bound against simulated frequencies.
//!
//! Exponential bounds are evaluated in log space; [`bound_value`] only
//! exponentiates at the end.

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::Dgp;
use crate::error::{Error, Result};
use crate::lsq::{criterion_value, fit_model, Criterion, ModelMask};
use crate::modelsel::{argmin_with_ties, ModelCollection};
use crate::oracle::{conditional_coverage, conditional_regression, exact_tv_gaussian, prediction_error, GaussianLaw};
use crate::predict::{estimated_law, two_sided_quantile};
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::special::{chi_sq_cdf, chi_sq_sf};
use crate::stats::McEstimate;

/// Closed-form bound or auxiliary function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    /// `C₁ exp[log #M − C₂(n − |M|)]` with user-supplied constants.
    #[serde(rename = "eq1")]
    Eq1,
    /// `6 exp[−(n−|m|)/8 · ε²/(ε+8)]`.
    #[serde(rename = "thm31")]
    Thm31,
    /// `6 exp[log #M − (n−|M|)/16 · ε²/(ε+16)]`.
    #[serde(rename = "cor32_5")]
    Cor32Selection,
    /// `6 exp[log #M − (n−|M|)/8 · ε²/(ε+8)]`.
    #[serde(rename = "cor32_6")]
    Cor32Estimate,
    /// `7 exp[−(n−|m|)/2 · ε²/(ε+2)]`, `0 < ε ≤ log 2`.
    #[serde(rename = "thm41")]
    Thm41,
    /// `7 exp[log #M − (n−|M|)/2 · ε²/(ε+2)]`, `0 < ε ≤ log 2`.
    #[serde(rename = "cor42")]
    Cor42,
    /// Same value as `Cor42`.
    #[serde(rename = "prop43")]
    Prop43,
    /// `4 exp[log #M − (n−|M|)/2 · ε²/(ε+2)]`.
    #[serde(rename = "prop44")]
    Prop44,
    /// `exp[−(n−|m|+1)/2 · t²/(t + 1 + (|m|−1)/n)]`.
    #[serde(rename = "lemB3_upper")]
    LemB3Upper,
    /// `exp[−(n−|m|)/2 · t²/(t+2)]`.
    #[serde(rename = "lemB3_coarse")]
    LemB3Coarse,
    /// `exp[−(n−|m|)/2 · t²/(t+2)]`.
    #[serde(rename = "lemB4")]
    LemB4,
    /// `exp[−(n−|m|)/2 · t²/(t+2)]`.
    #[serde(rename = "lemB5_lower")]
    LemB5Lower,
    /// `3 exp[−(n−|m|)/4 · t²/(t+4)]`.
    #[serde(rename = "lemB5_upper")]
    LemB5Upper,
    /// `|a|/√(2π) + |log s²|/√(2πe)`.
    #[serde(rename = "lemD1")]
    LemD1,
    /// `√(2/π) exp[−(t + log t)/2]`.
    #[serde(rename = "lemB1_tail")]
    LemB1Tail,
    /// `K(r, c) = (1+r) log((1+r+c)/(1+r)) − r log((r+c)/r)`.
    #[serde(rename = "kappa")]
    Kappa,
}

impl BoundKind {
    pub const ALL: [BoundKind; 16] = [
        BoundKind::Eq1,
        BoundKind::Thm31,
        BoundKind::Cor32Selection,
        BoundKind::Cor32Estimate,
        BoundKind::Thm41,
        BoundKind::Cor42,
        BoundKind::Prop43,
        BoundKind::Prop44,
        BoundKind::LemB3Upper,
        BoundKind::LemB3Coarse,
        BoundKind::LemB4,
        BoundKind::LemB5Lower,
        BoundKind::LemB5Upper,
        BoundKind::LemD1,
        BoundKind::LemB1Tail,
        BoundKind::Kappa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Eq1 => "eq1",
            BoundKind::Thm31 => "thm31",
            BoundKind::Cor32Selection => "cor32_5",
            BoundKind::Cor32Estimate => "cor32_6",
            BoundKind::Thm41 => "thm41",
            BoundKind::Cor42 => "cor42",
            BoundKind::Prop43 => "prop43",
            BoundKind::Prop44 => "prop44",
            BoundKind::LemB3Upper => "lemB3_upper",
            BoundKind::LemB3Coarse => "lemB3_coarse",
            BoundKind::LemB4 => "lemB4",
            BoundKind::LemB5Lower => "lemB5_lower",
            BoundKind::LemB5Upper => "lemB5_upper",
            BoundKind::LemD1 => "lemD1",
            BoundKind::LemB1Tail => "lemB1_tail",
            BoundKind::Kappa => "kappa",
        }
    }
}

/// Named arguments; each kind reads the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundArgs<T> {
    pub n: Option<usize>,
    /// `|m|`.
    pub m_size: Option<usize>,
    /// `|M|`.
    pub max_size: Option<usize>,
    /// `#M`.
    pub count: Option<usize>,
    pub epsilon: Option<T>,
    pub t: Option<T>,
    pub r: Option<T>,
    pub c: Option<T>,
    pub a: Option<T>,
    pub s_sq: Option<T>,
    pub c1: Option<T>,
    pub c2: Option<T>,
}

impl<T: Scalar> BoundArgs<T> {
    /// Single model of size `m_size` with sample size `n`.
    pub fn model(n: usize, m_size: usize) -> Self {
        Self { n: Some(n), m_size: Some(m_size), ..Self::default() }
    }

    /// Collection of `count` models, the largest with `max_size` coefficients.
    pub fn collection(n: usize, count: usize, max_size: usize) -> Self {
        Self { n: Some(n), count: Some(count), max_size: Some(max_size), ..Self::default() }
    }

    pub fn with_epsilon(mut self, e: T) -> Self {
        self.epsilon = Some(e);
        self
    }

    pub fn with_t(mut self, t: T) -> Self {
        self.t = Some(t);
        self
    }
}

fn domain(kind: BoundKind, detail: impl Into<String>) -> Error {
    Error::Domain { statement: kind.name(), detail: detail.into() }
}

fn need<V: Copy>(kind: BoundKind, v: Option<V>, name: &str) -> Result<V> {
    v.ok_or_else(|| domain(kind, format!("missing argument `{name}`")))
}

/// `n − k` after checking `k < n − 1`.
fn dof(kind: BoundKind, n: usize, k: usize, label: &str) -> Result<usize> {
    if k == 0 || k + 1 >= n {
        return Err(domain(kind, format!("need 1 <= {label} < n - 1, got {label} = {k}, n = {n}")));
    }
    Ok(n - k)
}

fn positive<T: Scalar>(kind: BoundKind, v: T, name: &str) -> Result<T> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(domain(kind, format!("{name} = {v} must be positive")));
    }
    Ok(v)
}

fn nonnegative<T: Scalar>(kind: BoundKind, v: T, name: &str) -> Result<T> {
    if !(v >= T::zero()) || !v.is_finite() {
        return Err(domain(kind, format!("{name} = {v} must be >= 0")));
    }
    Ok(v)
}

fn small_epsilon<T: Scalar>(kind: BoundKind, e: T) -> Result<T> {
    positive(kind, e, "epsilon")?;
    if e > T::LN_2() {
        return Err(domain(kind, format!("epsilon = {e} exceeds log 2")));
    }
    Ok(e)
}

/// `x²/(x + d)`.
fn ratio<T: Scalar>(x: T, d: T) -> T {
    x * x / (x + d)
}

fn log_count<T: Scalar>(kind: BoundKind, args: &BoundArgs<T>) -> Result<T> {
    let count = need(kind, args.count, "count")?;
    if count == 0 {
        return Err(domain(kind, "count must be >= 1"));
    }
    Ok(T::from_count(count).ln())
}

/// Natural logarithm of the bound (or of the function value for `lemD1`,
/// `lemB1_tail` and `kappa`).
pub fn bound_log_value<T: Scalar>(kind: BoundKind, args: &BoundArgs<T>) -> Result<T> {
    use BoundKind::*;
    let lit = T::lit;
    let single = |k: BoundKind| -> Result<(T, T)> {
        let n = need(k, args.n, "n")?;
        let m = need(k, args.m_size, "m_size")?;
        Ok((T::from_count(dof(k, n, m, "|m|")?), T::from_count(m)))
    };
    let multi = |k: BoundKind| -> Result<(T, T)> {
        let n = need(k, args.n, "n")?;
        let big = need(k, args.max_size, "max_size")?;
        Ok((T::from_count(dof(k, n, big, "|M|")?), log_count(k, args)?))
    };
    Ok(match kind {
        Eq1 => {
            let (df, lc) = multi(kind)?;
            let c1 = positive(kind, need(kind, args.c1, "C1")?, "C1")?;
            let c2 = positive(kind, need(kind, args.c2, "C2")?, "C2")?;
            c1.ln() + lc - c2 * df
        }
        Thm31 => {
            let (df, _) = single(kind)?;
            let e = positive(kind, need(kind, args.epsilon, "epsilon")?, "epsilon")?;
            lit(6.0).ln() - df / lit(8.0) * ratio(e, lit(8.0))
        }
        Cor32Selection => {
            let (df, lc) = multi(kind)?;
            let e = positive(kind, need(kind, args.epsilon, "epsilon")?, "epsilon")?;
            lit(6.0).ln() + lc - df / lit(16.0) * ratio(e, lit(16.0))
        }
        Cor32Estimate => {
            let (df, lc) = multi(kind)?;
            let e = positive(kind, need(kind, args.epsilon, "epsilon")?, "epsilon")?;
            lit(6.0).ln() + lc - df / lit(8.0) * ratio(e, lit(8.0))
        }
        Thm41 => {
            let (df, _) = single(kind)?;
            let e = small_epsilon(kind, need(kind, args.epsilon, "epsilon")?)?;
            lit(7.0).ln() - df / lit(2.0) * ratio(e, lit(2.0))
        }
        Cor42 | Prop43 => {
            let (df, lc) = multi(kind)?;
            let e = small_epsilon(kind, need(kind, args.epsilon, "epsilon")?)?;
            lit(7.0).ln() + lc - df / lit(2.0) * ratio(e, lit(2.0))
        }
        Prop44 => {
            let (df, lc) = multi(kind)?;
            let e = positive(kind, need(kind, args.epsilon, "epsilon")?, "epsilon")?;
            lit(4.0).ln() + lc - df / lit(2.0) * ratio(e, lit(2.0))
        }
        LemB3Upper => {
            let (df, m) = single(kind)?;
            let n = T::from_count(need(kind, args.n, "n")?);
            let t = nonnegative(kind, need(kind, args.t, "t")?, "t")?;
            -(df + T::one()) / lit(2.0) * t * t / (t + T::one() + (m - T::one()) / n)
        }
        LemB3Coarse | LemB4 | LemB5Lower => {
            let (df, _) = single(kind)?;
            let t = nonnegative(kind, need(kind, args.t, "t")?, "t")?;
            -df / lit(2.0) * ratio(t, lit(2.0))
        }
        LemB5Upper => {
            let (df, _) = single(kind)?;
            let t = nonnegative(kind, need(kind, args.t, "t")?, "t")?;
            lit(3.0).ln() - df / lit(4.0) * ratio(t, lit(4.0))
        }
        LemB1Tail => {
            let t = positive(kind, need(kind, args.t, "t")?, "t")?;
            lit(2.0 / PI).sqrt().ln() - (t + t.ln()) / lit(2.0)
        }
        LemD1 | Kappa => bound_value(kind, args)?.ln(),
    })
}

/// The bound itself (unclipped).
pub fn bound_value<T: Scalar>(kind: BoundKind, args: &BoundArgs<T>) -> Result<T> {
    match kind {
        BoundKind::LemD1 => {
            let a = need(kind, args.a, "a")?;
            let s2 = positive(kind, need(kind, args.s_sq, "s_sq")?, "s_sq")?;
            Ok(lemd1(a, s2))
        }
        BoundKind::Kappa => {
            let r = positive(kind, need(kind, args.r, "r")?, "r")?;
            let c = need(kind, args.c, "c")?;
            if !(c > -r) {
                return Err(domain(kind, format!("need c > -r, got c = {c}, r = {r}")));
            }
            let one = T::one();
            Ok((one + r) * ((one + r + c) / (one + r)).ln() - r * ((r + c) / r).ln())
        }
        _ => Ok(bound_log_value(kind, args)?.exp()),
    }
}

fn lemd1<T: Scalar>(a: T, s_sq: T) -> T {
    let two_pi = T::lit(2.0 * PI);
    a.abs() / two_pi.sqrt() + s_sq.ln().abs() / (two_pi * T::lit(E)).sqrt()
}

/// Auxiliary inequality checked pointwise on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InequalityKind {
    /// `F(t log t/(t−1)) − F(log t/(t−1)) ≤ log t/√(2πe)` for `t > 1`, `F` the χ²₁ CDF.
    #[serde(rename = "lemB1_first")]
    LemB1First,
    /// `1 − F(t) ≤ √(2/π) exp[−(t + log t)/2]` for `t > 0`.
    #[serde(rename = "lemB1_second")]
    LemB1Second,
    /// `t − s log((eᵗ+s−1)/s) ≥ (1−s)t²/(t+1+s)` for `0 < s < 1`, `t ≥ 0`.
    #[serde(rename = "lemB2_i")]
    LemB2I,
    /// `−t − s log(e⁻ᵗ+s−1) ≥ t − s log(eᵗ+s−1)` for `0 < s < 1`, `0 ≤ t < −log(1−s)`.
    #[serde(rename = "lemB2_ii")]
    LemB2Ii,
    /// `eᵗ−1−t ≥ e⁻ᵗ−1+t ≥ t²/(t+2)` for `t ≥ 0`.
    #[serde(rename = "lemB2_iii")]
    LemB2Iii,
    /// Exact `TV(N(a,s²), N(0,1)) ≤ |a|/√(2π) + |log s²|/√(2πe)`.
    #[serde(rename = "lemD1")]
    LemD1,
    /// Exact `TV(N(a,s²), N(0,1)) ≤ |a/s|/√(2π) + |log s²|/√(2πe)`.
    #[serde(rename = "remD1_variant")]
    RemD1Variant,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 7] = [
        InequalityKind::LemB1First,
        InequalityKind::LemB1Second,
        InequalityKind::LemB2I,
        InequalityKind::LemB2Ii,
        InequalityKind::LemB2Iii,
        InequalityKind::LemD1,
        InequalityKind::RemD1Variant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::LemB1First => "lemB1_first",
            InequalityKind::LemB1Second => "lemB1_second",
            InequalityKind::LemB2I => "lemB2_i",
            InequalityKind::LemB2Ii => "lemB2_ii",
            InequalityKind::LemB2Iii => "lemB2_iii",
            InequalityKind::LemD1 => "lemD1",
            InequalityKind::RemD1Variant => "remD1_variant",
        }
    }
}

/// Grid point: `(t, ·)` for one-parameter statements, `(s, t)` for the
/// Lemma B.2 parts (i) and (ii), `(a, s²)` for the total variation bounds.
pub type GridPoint = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub kind: InequalityKind,
    pub checked: usize,
    pub skipped: usize,
    /// `max(smaller side − larger side)`; `≤ 0` when the inequality holds.
    pub max_violation: f64,
    pub worst_point: Option<GridPoint>,
}

impl GridReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

fn in_domain(kind: InequalityKind, (x, y): GridPoint) -> bool {
    use InequalityKind::*;
    match kind {
        LemB1First => x > 1.0 && x.is_finite(),
        LemB1Second => x > 0.0 && x.is_finite(),
        LemB2I => y >= 0.0 && x > 0.0 && x < 1.0 && y.is_finite(),
        LemB2Ii => x > 0.0 && x < 1.0 && y >= 0.0 && y < -(1.0 - x).ln(),
        LemB2Iii => x >= 0.0 && x.is_finite(),
        LemD1 | RemD1Variant => x.is_finite() && y > 0.0 && y.is_finite(),
    }
}

/// Returns `smaller side − larger side` at one in-domain point.
fn violation(kind: InequalityKind, (x, y): GridPoint) -> Result<f64> {
    use InequalityKind::*;
    Ok(match kind {
        LemB1First => {
            let t = x;
            let v = t.ln() / (t - 1.0);
            let lhs = chi_sq_cdf(t * v, 1)? - chi_sq_cdf(v, 1)?;
            lhs - t.ln() / (2.0 * PI * E).sqrt()
        }
        LemB1Second => chi_sq_sf(x, 1)? - (2.0 / PI).sqrt() * (-(x + x.ln()) / 2.0).exp(),
        LemB2I => {
            let (s, t) = (x, y);
            let lhs = t - s * ((t.exp() + s - 1.0) / s).ln();
            (1.0 - s) * t * t / (t + 1.0 + s) - lhs
        }
        LemB2Ii => {
            let (s, t) = (x, y);
            let lhs = -t - s * ((-t).exp() + s - 1.0).ln();
            let rhs = t - s * (t.exp() + s - 1.0).ln();
            rhs - lhs
        }
        LemB2Iii => {
            let t = x;
            let first = t.exp_m1() - t;
            let second = (-t).exp_m1() + t;
            let third = t * t / (t + 2.0);
            (second - first).max(third - second)
        }
        LemD1 | RemD1Variant => {
            let (a, s2) = (x, y);
            let s = s2.sqrt();
            let tv = exact_tv_gaussian(GaussianLaw { mean: a, sd: s }, GaussianLaw { mean: 0.0, sd: 1.0 });
            let shift = if kind == LemD1 { a } else { a / s };
            tv - lemd1(shift, s2)
        }
    })
}

/// Evaluates both sides at every grid point; points outside the statement's
/// domain are skipped and counted.
pub fn check_inequality_grid(kind: InequalityKind, grid: &[GridPoint]) -> Result<GridReport> {
    let mut report = GridReport { kind, checked: 0, skipped: 0, max_violation: f64::NEG_INFINITY, worst_point: None };
    for &pt in grid {
        if !in_domain(kind, pt) {
            report.skipped += 1;
            continue;
        }
        let v = violation(kind, pt)?;
        report.checked += 1;
        if v > report.max_violation || v.is_nan() {
            report.max_violation = if v.is_nan() { f64::INFINITY } else { v };
            report.worst_point = Some(pt);
        }
    }
    Ok(report)
}

fn linspace(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
}

/// Default 10⁴-point grid inside each statement's domain.
pub fn default_grid(kind: InequalityKind) -> Vec<GridPoint> {
    use InequalityKind::*;
    const K: usize = 10_000;
    match kind {
        LemB1First => linspace(-6.0, 3.0, K).map(|e| (1.0 + 10f64.powf(e), 0.0)).collect(),
        LemB1Second => linspace(-4.0, 2.5, K).map(|e| (10f64.powf(e), 0.0)).collect(),
        LemB2I => {
            let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
            s.iter().flat_map(|&s| linspace(0.0, 30.0, 100).map(move |t| (s, t))).collect()
        }
        LemB2Ii => {
            let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
            s.iter()
                .flat_map(|&s| {
                    let cap = -(1.0 - s).ln();
                    linspace(0.0, 0.999, 100).map(move |f| (s, f * cap))
                })
                .collect()
        }
        LemB2Iii => linspace(0.0, 50.0, K).map(|t| (t, 0.0)).collect(),
        LemD1 | RemD1Variant => linspace(-5.0, 5.0, 100)
            .flat_map(|a| linspace(-3.0, 3.0, 100).map(move |l| (a, l.exp())))
            .collect(),
    }
}

/// Monte Carlo experiment tied to one bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    /// `{|log ρ̂²(m)/ρ²(m)| > ε}`.
    #[serde(rename = "thm31")]
    Thm31,
    /// `{log ρ²(m̂)/ρ²(m_ρ) > ε}`.
    #[serde(rename = "cor32_5")]
    Cor32Selection,
    /// `{|log ρ̂²(m̂)/ρ²(m̂)| > ε}`.
    #[serde(rename = "cor32_6")]
    Cor32Estimate,
    /// `{TV(L̂(m), L(m)) > 1/√n + ε}`.
    #[serde(rename = "thm41")]
    Thm41,
    /// `{TV(L̂(m̂), L(m̂)) > 1/√n + ε}`.
    #[serde(rename = "cor42")]
    Cor42,
    /// `{|(1−α) − coverage of I(m̂)| > 1/√n + ε}`.
    #[serde(rename = "prop43")]
    Prop43,
    /// `{|log δ̂(m̂)/δ(m_δ)| > ε}`.
    #[serde(rename = "prop44")]
    Prop44,
    /// `{δ²(m)κ > eᵗ}` and `{δ²(m)κ < e⁻ᵗ}`, `κ = (n−|m|+1)/(nσ²(m))`.
    #[serde(rename = "lemB3")]
    LemB3,
    /// As `LemB3` with `ρ̂²(m)`.
    #[serde(rename = "lemB4")]
    LemB4,
    /// As `LemB3` with `ρ²(m)`.
    #[serde(rename = "lemB5")]
    LemB5,
    /// Replication mean of `ν(m)` within 4 standard errors of 0.
    #[serde(rename = "prop21_nu_mean")]
    Prop21NuMean,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Thm31,
        Experiment::Cor32Selection,
        Experiment::Cor32Estimate,
        Experiment::Thm41,
        Experiment::Cor42,
        Experiment::Prop43,
        Experiment::Prop44,
        Experiment::LemB3,
        Experiment::LemB4,
        Experiment::LemB5,
        Experiment::Prop21NuMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Thm31 => "thm31",
            Experiment::Cor32Selection => "cor32_5",
            Experiment::Cor32Estimate => "cor32_6",
            Experiment::Thm41 => "thm41",
            Experiment::Cor42 => "cor42",
            Experiment::Prop43 => "prop43",
            Experiment::Prop44 => "prop44",
            Experiment::LemB3 => "lemB3",
            Experiment::LemB4 => "lemB4",
            Experiment::LemB5 => "lemB5",
            Experiment::Prop21NuMean => "prop21_nu_mean",
        }
    }

    /// Experiments about one fixed model (the rest need a collection).
    pub fn is_single_model(self) -> bool {
        matches!(
            self,
            Experiment::Thm31
                | Experiment::Thm41
                | Experiment::LemB3
                | Experiment::LemB4
                | Experiment::LemB5
                | Experiment::Prop21NuMean
        )
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown experiment {s:?}")))
    }
}

/// Outcome of one table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    Fail,
    /// The grid value lies outside the statement's domain; nothing simulated.
    DomainError(String),
}

/// One comparison of an empirical frequency with its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub experiment: Experiment,
    /// `"upper"`/`"lower"` for the two-sided lemmas, otherwise empty.
    pub event: String,
    /// `ε` or `t` (for `prop21_nu_mean`: unused, 0).
    pub param: f64,
    /// Empirical frequency (for `prop21_nu_mean`: mean of `ν`).
    pub frequency: f64,
    pub se: f64,
    /// Bound as computed, possibly above 1 (for `prop21_nu_mean`: 0).
    pub bound: f64,
    pub bound_reported: f64,
    pub reps: usize,
    pub status: RowStatus,
}

impl BoundRow {
    pub fn passed(&self) -> bool {
        self.status == RowStatus::Pass
    }
}

/// Per-replication quantities for one fixed model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelDraw {
    pub rho_hat_sq: f64,
    pub rho_sq: f64,
    pub delta_sq: f64,
    pub nu: f64,
    /// `TV(L̂(m), L(m))`.
    pub tv: f64,
}

/// Per-replication quantities for a collection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionDraw {
    /// `ρ̂²(m̂)`, `ρ²(m̂)`, `ρ²(m_ρ)`.
    pub rho_hat_sq_sel: f64,
    pub rho_sq_sel: f64,
    pub rho_sq_best: f64,
    /// `TV(L̂(m̂), L(m̂))`.
    pub tv_sel: f64,
    /// Conditional coverage of `I(m̂)`.
    pub coverage_sel: f64,
    /// `δ̂²(m̂)` and `δ²(m_δ)`.
    pub delta_hat_sq_sel: f64,
    pub delta_sq_best: f64,
}

/// Simulated draws for one fixed model, replication `r` on stream `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDraws {
    pub n: usize,
    pub m_size: usize,
    pub sigma_sq_m: f64,
    pub draws: Vec<ModelDraw>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionDraws {
    pub n: usize,
    pub count: usize,
    pub max_size: usize,
    pub alpha: f64,
    pub draws: Vec<CollectionDraw>,
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 1000 {
        return Err(Error::Domain { statement: "mc_bound_check", detail: format!("need at least 1000 replications, got {reps}") });
    }
    Ok(())
}

/// Simulates `reps` training samples of size `n` and records the fixed model's
/// estimated and true error laws.
pub fn simulate_model<T: Scalar>(dgp: &Dgp<T>, mask: &ModelMask, n: usize, reps: usize, seed: u64) -> Result<ModelDraws> {
    check_reps(reps)?;
    mask.check_size(n)?;
    let cond = conditional_regression(dgp, mask)?;
    let draws = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<ModelDraw> {
            let sample = dgp.sample_training(n, &mut substream(seed, r))?;
            let fit = fit_model(&sample, mask)?;
            let truth = prediction_error(dgp, &fit.beta_hat)?;
            let est = estimated_law(&fit);
            Ok(ModelDraw {
                rho_hat_sq: criterion_value(&fit, Criterion::RhoHatSq).to_f64_lossy(),
                rho_sq: truth.rho_sq().to_f64_lossy(),
                delta_sq: truth.delta_sq.to_f64_lossy(),
                nu: truth.nu.to_f64_lossy(),
                tv: exact_tv_gaussian(est.law, truth.law()).to_f64_lossy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelDraws { n, m_size: mask.size(), sigma_sq_m: cond.sigma_sq_m.to_f64_lossy(), draws })
}

/// Simulates `reps` training samples and records, per replication, the
/// selected model's quantities next to the oracle-best ones.
pub fn simulate_collection<T: Scalar>(
    dgp: &Dgp<T>,
    collection: &ModelCollection,
    n: usize,
    reps: usize,
    alpha: T,
    seed: u64,
) -> Result<CollectionDraws> {
    check_reps(reps)?;
    collection.check_size(n)?;
    let q = two_sided_quantile(alpha)?;
    let masks: Vec<&ModelMask> = collection.masks().iter().collect();
    let draws = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<CollectionDraw> {
            let sample = dgp.sample_training(n, &mut substream(seed, r))?;
            let k = masks.len();
            let mut rho_hat = Vec::with_capacity(k);
            let mut rho = Vec::with_capacity(k);
            let mut delta = Vec::with_capacity(k);
            let mut laws = Vec::with_capacity(k);
            for m in &masks {
                let fit = fit_model(&sample, m)?;
                let truth = prediction_error(dgp, &fit.beta_hat)?;
                rho_hat.push(criterion_value(&fit, Criterion::RhoHatSq));
                rho.push(truth.rho_sq());
                delta.push(truth.delta_sq);
                laws.push(truth.law());
            }
            let sel = argmin_with_ties(&rho_hat, &masks).expect("nonempty");
            let best_rho = argmin_with_ties(&rho, &masks).expect("nonempty");
            let best_delta = argmin_with_ties(&delta, &masks).expect("nonempty");
            let est = GaussianLaw { mean: T::zero(), sd: rho_hat[sel].max(T::zero()).sqrt() };
            Ok(CollectionDraw {
                rho_hat_sq_sel: rho_hat[sel].to_f64_lossy(),
                rho_sq_sel: rho[sel].to_f64_lossy(),
                rho_sq_best: rho[best_rho].to_f64_lossy(),
                tv_sel: exact_tv_gaussian(est, laws[sel]).to_f64_lossy(),
                coverage_sel: conditional_coverage(laws[sel], q * est.sd).to_f64_lossy(),
                delta_hat_sq_sel: rho_hat[sel].to_f64_lossy(),
                delta_sq_best: delta[best_delta].to_f64_lossy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CollectionDraws {
        n,
        count: collection.count(),
        max_size: collection.max_size(),
        alpha: alpha.to_f64_lossy(),
        draws,
    })
}

/// `|log(a/b)|` with `a = 0` read as infinite.
fn abs_log_ratio(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        (a / b).ln().abs()
    } else {
        f64::INFINITY
    }
}

fn row(experiment: Experiment, event: &str, param: f64, hits: usize, reps: usize, bound: Result<f64>) -> BoundRow {
    match bound {
        Err(e) => BoundRow {
            experiment,
            event: event.into(),
            param,
            frequency: f64::NAN,
            se: f64::NAN,
            bound: f64::NAN,
            bound_reported: f64::NAN,
            reps,
            status: RowStatus::DomainError(e.to_string()),
        },
        Ok(bound) => {
            let f = McEstimate::frequency(hits, reps);
            let pass = f.mean <= bound + 4.0 * f.se;
            BoundRow {
                experiment,
                event: event.into(),
                param,
                frequency: f.mean,
                se: f.se,
                bound,
                bound_reported: bound.min(1.0),
                reps,
                status: if pass { RowStatus::Pass } else { RowStatus::Fail },
            }
        }
    }
}

/// Evaluates a single-model experiment over a grid of `ε` (or `t`) values.
/// Bounds are computed before any event is counted, so an out-of-domain grid
/// value yields a domain-error row and the remaining values are still checked.
pub fn evaluate_model(experiment: Experiment, draws: &ModelDraws, grid: &[f64]) -> Result<Vec<BoundRow>> {
    if !experiment.is_single_model() {
        return Err(Error::InvalidSpec(format!("{} needs a model collection", experiment.name())));
    }
    let reps = draws.draws.len();
    let args = BoundArgs::<f64>::model(draws.n, draws.m_size);
    let kappa = (draws.n - draws.m_size + 1) as f64 / (draws.n as f64 * draws.sigma_sq_m);
    let count = |pred: &dyn Fn(&ModelDraw) -> bool| draws.draws.iter().filter(|d| pred(d)).count();
    let root_n = (draws.n as f64).sqrt().recip();
    let mut rows = Vec::new();
    if experiment == Experiment::Prop21NuMean {
        let nu: Vec<f64> = draws.draws.iter().map(|d| d.nu).collect();
        let est = McEstimate::from_values(&nu);
        rows.push(BoundRow {
            experiment,
            event: String::new(),
            param: 0.0,
            frequency: est.mean,
            se: est.se,
            bound: 0.0,
            bound_reported: 0.0,
            reps,
            status: if est.within(0.0, 4.0) { RowStatus::Pass } else { RowStatus::Fail },
        });
        return Ok(rows);
    }
    for &x in grid {
        match experiment {
            Experiment::Thm31 => {
                let b = bound_value(BoundKind::Thm31, &args.with_epsilon(x));
                let hits = count(&|d| abs_log_ratio(d.rho_hat_sq, d.rho_sq) > x);
                rows.push(row(experiment, "", x, hits, reps, b));
            }
            Experiment::Thm41 => {
                let b = bound_value(BoundKind::Thm41, &args.with_epsilon(x));
                let hits = count(&|d| d.tv > root_n + x);
                rows.push(row(experiment, "", x, hits, reps, b));
            }
            Experiment::LemB3 | Experiment::LemB4 | Experiment::LemB5 => {
                let (upper_kind, lower_kind, value): (BoundKind, BoundKind, fn(&ModelDraw) -> f64) = match experiment {
                    Experiment::LemB3 => (BoundKind::LemB3Upper, BoundKind::LemB3Upper, |d| d.delta_sq),
                    Experiment::LemB4 => (BoundKind::LemB4, BoundKind::LemB4, |d| d.rho_hat_sq),
                    _ => (BoundKind::LemB5Upper, BoundKind::LemB5Lower, |d| d.rho_sq),
                };
                let a = args.with_t(x);
                let up = count(&|d| value(d) * kappa > x.exp());
                rows.push(row(experiment, "upper", x, up, reps, bound_value(upper_kind, &a)));
                let lo = count(&|d| value(d) * kappa < (-x).exp());
                rows.push(row(experiment, "lower", x, lo, reps, bound_value(lower_kind, &a)));
            }
            _ => unreachable!("collection experiments rejected above"),
        }
    }
    Ok(rows)
}

/// Evaluates a collection experiment over a grid of `ε` values.
pub fn evaluate_collection(experiment: Experiment, draws: &CollectionDraws, grid: &[f64]) -> Result<Vec<BoundRow>> {
    if experiment.is_single_model() {
        return Err(Error::InvalidSpec(format!("{} needs a single model", experiment.name())));
    }
    let reps = draws.draws.len();
    let args = BoundArgs::<f64>::collection(draws.n, draws.count, draws.max_size);
    let root_n = (draws.n as f64).sqrt().recip();
    let count = |pred: &dyn Fn(&CollectionDraw) -> bool| draws.draws.iter().filter(|d| pred(d)).count();
    let mut rows = Vec::new();
    for &e in grid {
        let a = args.with_epsilon(e);
        let (kind, hits) = match experiment {
            Experiment::Cor32Selection => {
                (BoundKind::Cor32Selection, count(&|d| (d.rho_sq_sel / d.rho_sq_best).ln() > e))
            }
            Experiment::Cor32Estimate => {
                (BoundKind::Cor32Estimate, count(&|d| abs_log_ratio(d.rho_hat_sq_sel, d.rho_sq_sel) > e))
            }
            Experiment::Cor42 => (BoundKind::Cor42, count(&|d| d.tv_sel > root_n + e)),
            Experiment::Prop43 => {
                let nominal = 1.0 - draws.alpha;
                (BoundKind::Prop43, count(&|d| (nominal - d.coverage_sel).abs() > root_n + e))
            }
            Experiment::Prop44 => (
                BoundKind::Prop44,
                // |log δ̂/δ| = |log δ̂²/δ²| / 2
                count(&|d| abs_log_ratio(d.delta_hat_sq_sel, d.delta_sq_best) / 2.0 > e),
            ),
            _ => unreachable!("single-model experiments rejected above"),
        };
        rows.push(row(experiment, "", e, hits, reps, bound_value(kind, &a)));
    }
    Ok(rows)
}

/// What a Monte Carlo bound check runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Model(ModelMask),
    Collection(ModelCollection),
}

/// Simulates and evaluates one experiment. Campaigns covering several
/// experiments should call [`simulate_model`] / [`simulate_collection`] once
/// and evaluate every experiment on the shared draws.
pub fn mc_bound_check<T: Scalar>(
    experiment: Experiment,
    dgp: &Dgp<T>,
    target: &Target,
    n: usize,
    reps: usize,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<BoundRow>> {
    match (target, experiment.is_single_model()) {
        (Target::Model(mask), true) => evaluate_model(experiment, &simulate_model(dgp, mask, n, reps, seed)?, grid),
        (Target::Collection(c), false) => {
            evaluate_collection(experiment, &simulate_collection(dgp, c, n, reps, T::lit(0.05), seed)?, grid)
        }
        (Target::Model(_), false) => Err(Error::InvalidSpec(format!("{} needs a model collection", experiment.name()))),
        (Target::Collection(_), true) => Err(Error::InvalidSpec(format!("{} needs a single model", experiment.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let a = BoundArgs::<f64>::model(100, 20).with_epsilon(1.0);
        let v = bound_value(BoundKind::Thm31, &a).unwrap();
        assert!((v - 6.0 * (-10.0f64 / 9.0).exp()).abs() < 1e-12);
        let tiny = bound_value(BoundKind::Thm31, &a.with_epsilon(1e-12)).unwrap();
        assert!((tiny - 6.0).abs() < 1e-9);
        let b3 = bound_value(BoundKind::LemB3Upper, &BoundArgs::model(60, 15).with_t(0.0)).unwrap();
        assert_eq!(b3, 1.0);
        let m = BoundArgs::<f64>::model(60, 15);
        assert!(matches!(bound_value(BoundKind::Thm41, &m.with_epsilon(0.7)), Err(Error::Domain { statement: "thm41", .. })));
        assert!(bound_value(BoundKind::Thm41, &m.with_epsilon(std::f64::consts::LN_2)).is_ok());
        assert!(bound_value(BoundKind::Thm31, &m).is_err());
        assert!(bound_value(BoundKind::Thm31, &BoundArgs::model(16, 15).with_epsilon(1.0)).is_err());
    }

    #[test]
    fn collection_bounds_in_log_space() {
        let a = BoundArgs::<f64>::collection(100_000, 1000, 20).with_epsilon(0.5);
        let log = bound_log_value(BoundKind::Prop44, &a).unwrap();
        let expected = 4f64.ln() + 1000f64.ln() - 99_980.0 / 2.0 * 0.25 / 2.5;
        assert!((log - expected).abs() < 1e-9);
        assert_eq!(bound_value(BoundKind::Prop44, &a).unwrap(), 0.0);
        let eq1 = BoundArgs { c1: Some(2.0), c2: Some(0.1), ..BoundArgs::<f64>::collection(50, 4, 10) };
        let v = bound_value(BoundKind::Eq1, &eq1).unwrap();
        assert!((v - 2.0 * (4f64.ln() - 4.0).exp()).abs() < 1e-14);
        assert!(bound_value(BoundKind::Eq1, &BoundArgs::<f64>::collection(50, 4, 10)).is_err());
    }

    #[test]
    fn kappa_and_tails() {
        let k = |r: f64, c: f64| bound_value(BoundKind::Kappa, &BoundArgs { r: Some(r), c: Some(c), ..Default::default() });
        assert_eq!(k(0.5, 0.0).unwrap(), 0.0);
        assert!(k(0.5, 2.0).unwrap() > 0.0);
        assert!(k(0.5, -0.4).unwrap() > 0.0);
        assert!(k(0.5, -0.5).is_err());
        assert!(k(0.0, 1.0).is_err());
        let tail = bound_value(BoundKind::LemB1Tail, &BoundArgs::<f64>::default().with_t(1.0)).unwrap();
        assert!((tail - 0.48394144903828673).abs() < 1e-14);
        let d1 = bound_value(BoundKind::LemD1, &BoundArgs { a: Some(0.0), s_sq: Some(1.0), ..Default::default() }).unwrap();
        assert_eq!(d1, 0.0);
    }

    #[test]
    fn grid_point_examples() {
        let r = check_inequality_grid(InequalityKind::LemB2Iii, &[(0.0, 0.0)]).unwrap();
        assert_eq!(r.max_violation, 0.0);
        let r = check_inequality_grid(InequalityKind::LemB1Second, &[(1.0, 0.0)]).unwrap();
        assert!((r.max_violation - (0.31731050786291115 - 0.48394144903828673)).abs() < 1e-12);
        let r = check_inequality_grid(InequalityKind::LemB2I, &[(0.5, 1.0)]).unwrap();
        let lhs = 1.0 - 0.5 * ((1f64.exp() - 0.5) / 0.5).ln();
        assert!((r.max_violation - (0.2 - lhs)).abs() < 1e-14);
        let r = check_inequality_grid(InequalityKind::LemB1First, &[(0.5, 0.0), (1.0, 0.0), (2.0, 0.0)]).unwrap();
        assert_eq!((r.checked, r.skipped), (1, 2));
    }

    #[test]
    fn default_grids_have_full_size() {
        for k in InequalityKind::ALL {
            let g = default_grid(k);
            assert_eq!(g.len(), 10_000, "{}", k.name());
            assert!(g.iter().all(|&p| in_domain(k, p)), "{}", k.name());
        }
    }

    #[test]
    fn names_roundtrip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        for k in BoundKind::ALL {
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }
}
