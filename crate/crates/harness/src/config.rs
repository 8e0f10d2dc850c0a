//! JSON experiment configuration.
//!
//! A configuration names the data-generating process (a block-study preset or
//! an explicit specification), the training size, the block structure, the
//! interval level, replication count and seed, the settings of the
//! verification campaigns and where to write results. Every field except
//! `dgp` has a default.

use std::path::{Path, PathBuf};

use cpi_core::dgp::{BlockStudyDesign, Covariance, DgpSpec, Sparsity};
use cpi_core::{BlockPartition, Dgp64, DgpSpec64};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

/// Problem size of the block-study presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// n = 500, 25 blocks of 10.
    #[default]
    Reduced,
    /// n = 2000, 50 blocks of 20.
    Full,
}

impl Scale {
    pub fn n(self) -> usize {
        match self {
            Scale::Reduced => 500,
            Scale::Full => 2000,
        }
    }

    pub fn blocks(self) -> BlockSpec {
        match self {
            Scale::Reduced => BlockSpec { count: 25, width: 10 },
            Scale::Full => BlockSpec { count: 50, width: 20 },
        }
    }
}

/// Seed of the coefficient and mean draws used by the presets.
pub const PRESET_DESIGN_SEED: u64 = 2024;

fn preset_design_seed() -> u64 {
    PRESET_DESIGN_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub sparsity: Sparsity,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default = "preset_design_seed")]
    pub design_seed: u64,
}

impl Preset {
    pub fn design(&self) -> BlockStudyDesign {
        let b = self.scale.blocks();
        BlockStudyDesign::new(self.sparsity, b.count, b.width, self.design_seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpSource {
    Preset(Preset),
    Spec(DgpSpec64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub count: usize,
    pub width: usize,
}

/// Pass/fail thresholds applied to the study aggregate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Targets {
    /// Inclusive range for the median coverage of the selected model's interval.
    #[serde(default)]
    pub coverage_median: Option<[f64; 2]>,
    /// Lower limit for the smallest such coverage.
    #[serde(default)]
    pub coverage_min: Option<f64>,
}

/// Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Prop21Settings {
    pub n: usize,
    /// `|m|` of the leading model, intercept counted.
    pub m_size: usize,
    pub reps: usize,
    /// Setting of the `E[ρ²]` comparison.
    pub rho_n: usize,
    pub rho_m_size: usize,
    pub rho_reps: usize,
}

impl Default for Prop21Settings {
    fn default() -> Self {
        Self { n: 60, m_size: 15, reps: 20_000, rho_n: 100, rho_m_size: 10, rho_reps: 20_000 }
    }
}

/// Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundSettings {
    /// Single-model experiments.
    pub n_model: usize,
    pub m_size: usize,
    /// Collection experiments: nested leading models of these sizes.
    pub n_collection: usize,
    pub collection_sizes: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub epsilon_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Also run the deterministic inequality grids.
    pub inequality_grids: bool,
}

impl Default for BoundSettings {
    fn default() -> Self {
        let ln2 = std::f64::consts::LN_2;
        Self {
            n_model: 60,
            m_size: 15,
            n_collection: 120,
            collection_sizes: (5..=20).collect(),
            reps: 10_000,
            alpha: 0.05,
            epsilon_grid: vec![0.25, 0.5, ln2],
            t_grid: vec![0.25, 0.5, ln2],
            inequality_grids: true,
        }
    }
}

/// Settings of `verify-prop21` and `verify-bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    #[serde(default = "default_verification_dgps")]
    pub dgps: Vec<DgpSpec64>,
    #[serde(default)]
    pub prop21: Prop21Settings,
    #[serde(default)]
    pub bounds: BoundSettings,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { dgps: default_verification_dgps(), prop21: Prop21Settings::default(), bounds: BoundSettings::default() }
    }
}

/// Two processes with 24 regressors and decaying coefficients, one with
/// identity covariance and one with `Σⱼₖ = 0.5^|j−k|`.
pub fn default_verification_dgps() -> Vec<DgpSpec64> {
    let p = 24;
    let beta: Vec<f64> = (1..=p).map(|j| 1.0 / j as f64).collect();
    let gamma: Vec<f64> = (1..=p).map(|j| if j % 2 == 0 { 0.5 } else { -0.25 }).collect();
    [Covariance::identity(), Covariance::Geometric { r: 0.5 }]
        .into_iter()
        .map(|sigma_x| DgpSpec { p, beta0: 1.0, beta: beta.clone(), gamma: gamma.clone(), sigma_x, sigma_u: 1.0 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Emit SVG path plots next to the tables.
    #[serde(default)]
    pub svg: bool,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_reps() -> usize {
    100
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dgp: DgpSource,
    /// Defaults to the preset's size; required with an explicit spec.
    #[serde(default)]
    pub n: Option<usize>,
    /// Defaults to the preset's blocks; with an explicit spec, one block per regressor.
    #[serde(default)]
    pub blocks: Option<BlockSpec>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub targets: Targets,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Block-study preset with its coverage targets.
    pub fn preset(sparsity: Sparsity, scale: Scale) -> Self {
        let targets = match scale {
            Scale::Reduced => Targets { coverage_median: Some([0.93, 0.96]), coverage_min: Some(0.90) },
            Scale::Full => {
                let centre = match sparsity {
                    Sparsity::Sparse => 0.949,
                    Sparsity::Nonsparse => 0.942,
                };
                let milli = |x: f64| (x * 1000.0).round() / 1000.0;
                Targets { coverage_median: Some([milli(centre - 0.01), milli(centre + 0.01)]), coverage_min: None }
            }
        };
        Self {
            dgp: DgpSource::Preset(Preset { sparsity, scale, design_seed: PRESET_DESIGN_SEED }),
            n: None,
            blocks: None,
            alpha: default_alpha(),
            reps: default_reps(),
            seed: default_seed(),
            targets,
            verify: VerifyConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.into(), source })?;
        Ok(cfg)
    }

    pub fn n(&self) -> Result<usize> {
        match (self.n, &self.dgp) {
            (Some(n), _) => Ok(n),
            (None, DgpSource::Preset(p)) => Ok(p.scale.n()),
            (None, DgpSource::Spec(_)) => Err(HarnessError::Config("`n` is required with an explicit dgp spec".into())),
        }
    }

    pub fn spec(&self) -> Result<DgpSpec64> {
        Ok(match &self.dgp {
            DgpSource::Preset(p) => p.design().to_spec()?,
            DgpSource::Spec(s) => s.clone(),
        })
    }

    pub fn block_spec(&self) -> Result<BlockSpec> {
        Ok(match (self.blocks, &self.dgp) {
            (Some(b), _) => b,
            (None, DgpSource::Preset(p)) => p.scale.blocks(),
            (None, DgpSource::Spec(s)) => BlockSpec { count: s.p, width: 1 },
        })
    }

    /// Contiguous blocks over the leading `count × width` regressors.
    pub fn partition(&self, p: usize) -> Result<BlockPartition> {
        let b = self.block_spec()?;
        if b.count == 0 || b.width == 0 {
            return Err(HarnessError::Config("block count and width must be >= 1".into()));
        }
        if b.count * b.width > p {
            return Err(HarnessError::Config(format!("{} blocks of {} exceed p = {p}", b.count, b.width)));
        }
        Ok(BlockPartition::contiguous(b.count, b.width)?.with_p(p)?)
    }

    /// Rejects infeasible settings before any computation.
    pub fn validate(&self) -> Result<(Dgp64, BlockPartition, usize)> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(HarnessError::Config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.reps == 0 {
            return Err(HarnessError::Config("reps must be >= 1".into()));
        }
        let n = self.n()?;
        let dgp = self.spec()?.build()?;
        let blocks = self.partition(dgp.p())?;
        let size = blocks.full_mask().size();
        if size + 1 >= n {
            return Err(HarnessError::Config(format!("largest model has |M| = {size} but n = {n} requires |M| < n - 1")));
        }
        Ok((dgp, blocks, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"dgp": {"preset": {"sparsity": "sparse"}}}"#).unwrap();
        assert_eq!(cfg.n().unwrap(), 500);
        assert_eq!(cfg.block_spec().unwrap(), BlockSpec { count: 25, width: 10 });
        assert_eq!(cfg.reps, 100);
        assert_eq!(cfg.verify.bounds.collection_sizes.len(), 16);
        let partial: VerifyConfig = serde_json::from_str(r#"{"prop21": {"reps": 15000}, "bounds": {"reps": 500}}"#).unwrap();
        assert_eq!((partial.prop21.reps, partial.prop21.rho_n, partial.bounds.reps, partial.bounds.n_collection), (15000, 100, 500, 120));
        let (dgp, blocks, n) = cfg.validate().unwrap();
        assert_eq!((dgp.p(), blocks.len(), n), (250, 25, 500));
    }

    #[test]
    fn infeasible_configs_rejected() {
        let mut cfg = ExperimentConfig::preset(Sparsity::Sparse, Scale::Reduced);
        cfg.n = Some(200);
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        cfg.n = None;
        cfg.blocks = Some(BlockSpec { count: 30, width: 10 });
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        cfg.blocks = None;
        cfg.alpha = 1.0;
        assert!(cfg.validate().is_err());
        let spec = r#"{"dgp": {"spec": {"p": 2, "beta0": 0.0, "beta": [1.0, 1.0], "gamma": [0.0, 0.0],
            "sigma_x": {"family": "geometric", "r": 0.0}, "sigma_u": 1.0}}}"#;
        let cfg: ExperimentConfig = serde_json::from_str(spec).unwrap();
        assert!(matches!(cfg.n(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::preset(Sparsity::Nonsparse, Scale::Full);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
