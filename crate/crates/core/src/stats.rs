//! Small Monte Carlo summaries shared by the verification code.

use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl McEstimate {
    /// Mean and `sd / √count` (unbiased variance). A single value has `se = 0`.
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, count };
        }
        let n = count as f64;
        let mean = values.iter().sum::<f64>() / n;
        if count == 1 {
            return Self { mean, se: 0.0, count };
        }
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Self { mean, se: (ss / (n - 1.0) / n).sqrt(), count }
    }

    /// Frequency of `hits` out of `count` with the binomial standard error.
    pub fn frequency(hits: usize, count: usize) -> Self {
        let n = count as f64;
        let f = hits as f64 / n;
        Self { mean: f, se: (f * (1.0 - f) / n).sqrt(), count }
    }

    /// `|mean − target| ≤ k·se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and `cdf`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let e = McEstimate::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(McEstimate::from_values(&[3.0]).se, 0.0);
        let f = McEstimate::frequency(25, 100);
        assert!((f.se - (0.1875f64 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ks_on_uniform_grid() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&v, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
        let d = ks_statistic(&[0.0], |x| if x < 0.0 { 0.0 } else { 0.5 });
        assert!((d - 0.5).abs() < 1e-15);
    }
}
