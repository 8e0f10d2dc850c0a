//! Block-selection study: greedy general-to-specific elimination over
//! contiguous blocks, selection by `ρ̂²` along the path, and the oracle
//! performance and interval coverage of every visited model.

use cpi_core::lsq::{criterion_from_rss, Criterion};
use cpi_core::modelsel::{greedy_block_path, select_on_path, EliminationStrategy};
use cpi_core::oracle::{conditional_coverage, prediction_error};
use cpi_core::predict::two_sided_quantile;
use cpi_core::rng::{derive_seed, substream, tag};
use cpi_core::{BlockPartition, Dgp64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// One visited model of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub step: usize,
    pub size: usize,
    pub rho_hat_sq: f64,
    pub rho_sq: f64,
    /// Conditional coverage of `I(m)` given the training sample.
    pub coverage: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub replication: usize,
    pub rows: Vec<PathRow>,
    pub selected_size: usize,
    pub rho_hat_sq_sel: f64,
    pub rho_sq_sel: f64,
    pub coverage_sel: f64,
    pub min_coverage: f64,
    /// Mean over the path of `ρ² − ρ̂²`.
    pub mean_gap: f64,
}

/// Summary over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyAggregate {
    pub reps: usize,
    pub n: usize,
    pub p: usize,
    pub blocks: usize,
    pub alpha: f64,
    pub seed: u64,
    pub median_coverage: f64,
    pub min_coverage: f64,
    pub median_path_min_coverage: f64,
    pub min_path_min_coverage: f64,
    pub mean_gap: f64,
    pub mean_rho_hat_sq_sel: f64,
    pub mean_rho_sq_sel: f64,
    pub mean_selected_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCheck {
    pub name: String,
    pub value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub reports: Vec<ReplicationReport>,
    pub aggregate: StudyAggregate,
    pub checks: Vec<TargetCheck>,
}

impl StudyResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs replication `r` on training stream `r`.
pub fn run_replication(
    dgp: &Dgp64,
    blocks: &BlockPartition,
    n: usize,
    alpha: f64,
    seed: u64,
    r: usize,
) -> Result<ReplicationReport> {
    let q = two_sided_quantile(alpha)?;
    let sample = dgp.sample_training(n, &mut substream(derive_seed(seed, tag::TRAINING), r as u64))?;
    let path = greedy_block_path(&sample, blocks, EliminationStrategy::Downdate)?;
    let sel = select_on_path(&sample, &path)?;
    let mut rows = Vec::with_capacity(path.visited.len());
    for (step, (mask, (rss, beta))) in path.visited.iter().zip(path.rss_path.iter().zip(&path.beta_path)).enumerate() {
        let rho_hat_sq = criterion_from_rss(Criterion::RhoHatSq, *rss, n, mask.size());
        let truth = prediction_error(dgp, beta)?;
        let est_sd = rho_hat_sq.max(0.0).sqrt();
        let coverage = conditional_coverage(truth.law(), q * est_sd);
        rows.push(PathRow { step, size: mask.size(), rho_hat_sq, rho_sq: truth.rho_sq(), coverage, selected: step == sel.index });
    }
    let chosen = rows[sel.index];
    let min_coverage = rows.iter().map(|r| r.coverage).fold(f64::INFINITY, f64::min);
    let mean_gap = rows.iter().map(|r| r.rho_sq - r.rho_hat_sq).sum::<f64>() / rows.len() as f64;
    Ok(ReplicationReport {
        replication: r,
        rows,
        selected_size: chosen.size,
        rho_hat_sq_sel: chosen.rho_hat_sq,
        rho_sq_sel: chosen.rho_sq,
        coverage_sel: chosen.coverage,
        min_coverage,
        mean_gap,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = values.fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
    s / k as f64
}

pub fn aggregate(reports: &[ReplicationReport], n: usize, p: usize, blocks: usize, alpha: f64, seed: u64) -> StudyAggregate {
    let mut cov: Vec<f64> = reports.iter().map(|r| r.coverage_sel).collect();
    let mut path_min: Vec<f64> = reports.iter().map(|r| r.min_coverage).collect();
    StudyAggregate {
        reps: reports.len(),
        n,
        p,
        blocks,
        alpha,
        seed,
        median_coverage: median(&mut cov),
        min_coverage: cov[0],
        median_path_min_coverage: median(&mut path_min),
        min_path_min_coverage: path_min[0],
        mean_gap: mean(reports.iter().map(|r| r.mean_gap)),
        mean_rho_hat_sq_sel: mean(reports.iter().map(|r| r.rho_hat_sq_sel)),
        mean_rho_sq_sel: mean(reports.iter().map(|r| r.rho_sq_sel)),
        mean_selected_size: mean(reports.iter().map(|r| r.selected_size as f64)),
    }
}

/// Runs every replication of the configured study. Replications are spread
/// over the current rayon pool and collected in index order.
pub fn run_section5(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let (dgp, blocks, n) = cfg.validate()?;
    let reports = (0..cfg.reps)
        .into_par_iter()
        .map(|r| run_replication(&dgp, &blocks, n, cfg.alpha, cfg.seed, r))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&reports, n, dgp.p(), blocks.len(), cfg.alpha, cfg.seed);
    let mut checks = Vec::new();
    if let Some([lo, hi]) = cfg.targets.coverage_median {
        let v = aggregate.median_coverage;
        checks.push(TargetCheck { name: format!("median coverage in [{lo}, {hi}]"), value: v, passed: lo <= v && v <= hi });
    }
    if let Some(lo) = cfg.targets.coverage_min {
        let v = aggregate.min_coverage;
        checks.push(TargetCheck { name: format!("minimum coverage >= {lo}"), value: v, passed: v >= lo });
    }
    Ok(StudyResult { reports, aggregate, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BlockSpec, DgpSource};
    use cpi_core::dgp::{Covariance, DgpSpec};

    fn small_config(blocks: BlockSpec, reps: usize) -> ExperimentConfig {
        let spec = DgpSpec {
            p: 6,
            beta0: 0.0,
            beta: vec![1.0, 0.5, 0.25, 0.0, 0.0, 0.1],
            gamma: vec![0.1; 6],
            sigma_x: Covariance::Geometric { r: 0.5 },
            sigma_u: 1.0,
        };
        let mut cfg = ExperimentConfig::preset(cpi_core::dgp::Sparsity::Sparse, crate::config::Scale::Reduced);
        cfg.dgp = DgpSource::Spec(spec);
        cfg.n = Some(40);
        cfg.blocks = Some(blocks);
        cfg.reps = reps;
        cfg.targets = Default::default();
        cfg
    }

    #[test]
    fn one_block_gives_two_rows() {
        let res = run_section5(&small_config(BlockSpec { count: 1, width: 6 }, 1)).unwrap();
        assert_eq!(res.reports.len(), 1);
        let rows = &res.reports[0].rows;
        assert_eq!(rows.len(), 2);
        assert_eq!(rows.iter().filter(|r| r.selected).count(), 1);
        assert!(res.passed());
    }

    #[test]
    fn bookkeeping() {
        let res = run_section5(&small_config(BlockSpec { count: 3, width: 2 }, 20)).unwrap();
        for rep in &res.reports {
            assert_eq!(rep.rows.iter().filter(|r| r.selected).count(), 1);
            assert!(rep.coverage_sel >= rep.min_coverage);
            assert!(rep.rows.iter().all(|r| (0.0..=1.0).contains(&r.coverage)));
        }
        assert!(res.aggregate.min_coverage <= res.aggregate.median_coverage);
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0, 4.0]), 2.5);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
    }
}
