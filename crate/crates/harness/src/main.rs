use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpi_core::dgp::Sparsity;
use cpi_core::Criterion;
use cpi_harness::config::{BlockSpec, ExperimentConfig, Scale};
use cpi_harness::fitpredict::{fit_and_predict, read_table, FitPredictOptions, ModelSpec};
use cpi_harness::{output, run_section5, verify_bounds, verify_prop21, with_threads, HarnessError, THREADS_ENV};

#[derive(Parser)]
#[command(name = "cpi", version, about = "Prediction intervals after model selection: simulation, verification and fitting")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Sparse,
    Nonsparse,
}

#[derive(Subcommand)]
enum Command {
    /// Block-selection study: greedy elimination, selection and coverage.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Preset used when no configuration file is given.
        #[arg(long, value_enum, default_value = "sparse")]
        preset: PresetArg,
        /// Full-size preset (n = 2000, 50 blocks of 20) instead of the reduced one.
        #[arg(long)]
        full: bool,
        /// Also write path.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Sampling laws of a fixed model's error quantities.
    VerifyProp21 {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo bound checks and inequality grids.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        /// Skip the deterministic inequality grids.
        #[arg(long)]
        no_grids: bool,
    },
    /// Select a model on a CSV training table and predict new rows.
    FitPredict {
        /// Training table: response first, then regressors.
        #[arg(long)]
        data: PathBuf,
        /// Future regressor rows.
        #[arg(long)]
        future: Option<PathBuf>,
        /// JSON fit options (model, alpha, criterion).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Contiguous blocks as COUNTxWIDTH.
        #[arg(long, conflicts_with = "mask")]
        blocks: Option<String>,
        /// Fixed model as comma-separated 1-based regressor positions.
        #[arg(long)]
        mask: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        criterion: Option<Criterion>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common, fallback: impl FnOnce() -> ExperimentConfig) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => fallback(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, default: &str) -> PathBuf {
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn parse_blocks(s: &str) -> Result<BlockSpec, HarnessError> {
    let bad = || HarnessError::Config(format!("--blocks expects COUNTxWIDTH, got {s:?}"));
    let (c, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok(BlockSpec { count: c.trim().parse().map_err(|_| bad())?, width: w.trim().parse().map_err(|_| bad())? })
}

fn parse_mask(s: &str) -> Result<Vec<usize>, HarnessError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| HarnessError::Config(format!("--mask: bad position {t:?}"))))
        .collect()
}

fn status(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let threads = cli.threads;
    match cli.command {
        Command::Simulate { common, preset, full, svg } => {
            let sparsity = match preset {
                PresetArg::Sparse => Sparsity::Sparse,
                PresetArg::Nonsparse => Sparsity::Nonsparse,
            };
            let scale = if full { Scale::Full } else { Scale::Reduced };
            let mut cfg = load(&common, || ExperimentConfig::preset(sparsity, scale))?;
            if let Some(r) = common.reps {
                cfg.reps = r;
            }
            cfg.output.svg |= svg;
            let result = with_threads(threads, || run_section5(&cfg))??;
            let dir = out_dir(&cfg, "out/simulate");
            output::write_study(&result, &dir, cfg.output.svg)?;
            let a = &result.aggregate;
            println!(
                "reps {}  n {}  p {}  median coverage {:.4}  min coverage {:.4}  mean(rho^2 - rho_hat^2) {:.4}",
                a.reps, a.n, a.p, a.median_coverage, a.min_coverage, a.mean_gap
            );
            for c in &result.checks {
                println!("{} {} ({:.4})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            println!("wrote {}", dir.display());
            Ok(status(result.passed()))
        }
        Command::VerifyProp21 { common } => {
            let mut cfg = load(&common, default_verification)?;
            if let Some(r) = common.reps {
                cfg.verify.prop21.reps = r;
                cfg.verify.prop21.rho_reps = r;
            }
            let report = with_threads(threads, || verify_prop21(&cfg.verify, cfg.seed))??;
            let dir = out_dir(&cfg, "out/verify-prop21");
            output::write_prop21(&report, &dir)?;
            for d in &report.dgps {
                println!(
                    "dgp {}: ks delta^2 {}  ks nu {:.4}  ks sigma_hat {:.4}  nu mean {:.4} (se {:.4})  {}",
                    d.dgp,
                    d.ks_delta_sq.map_or("exact".into(), |k| format!("{k:.4}")),
                    d.ks_nu,
                    d.ks_sigma_hat,
                    d.nu_mean.mean,
                    d.nu_mean.se,
                    if d.passed { "PASS" } else { "FAIL" }
                );
            }
            println!("wrote {}", dir.display());
            Ok(status(report.passed()))
        }
        Command::VerifyBounds { common, no_grids } => {
            let mut cfg = load(&common, default_verification)?;
            if let Some(r) = common.reps {
                cfg.verify.bounds.reps = r;
            }
            if no_grids {
                cfg.verify.bounds.inequality_grids = false;
            }
            let report = with_threads(threads, || verify_bounds(&cfg.verify, cfg.seed))??;
            let dir = out_dir(&cfg, "out/verify-bounds");
            output::write_bounds(&report, &dir)?;
            let fails = report.rows.iter().filter(|r| r.row.status == cpi_core::bounds::RowStatus::Fail).count();
            let domain = report.rows.iter().filter(|r| matches!(r.row.status, cpi_core::bounds::RowStatus::DomainError(_))).count();
            println!("{} rows: {} failed, {} outside the statement's domain", report.rows.len(), fails, domain);
            for g in &report.grids {
                println!("{} {:<14} max violation {:.3e}", if g.holds(report.grid_tolerance) { "PASS" } else { "FAIL" }, g.kind.name(), g.max_violation);
            }
            println!("wrote {}", dir.display());
            Ok(status(report.passed()))
        }
        Command::FitPredict { data, future, config, blocks, mask, alpha, criterion, out } => {
            let mut opts = match &config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|source| HarnessError::Io { path: p.clone(), source })?;
                    serde_json::from_str::<FitPredictOptions>(&text).map_err(|source| HarnessError::Json { path: p.clone(), source })?
                }
                None => FitPredictOptions::default(),
            };
            if let Some(b) = blocks {
                opts.model = Some(ModelSpec::Blocks(parse_blocks(&b)?));
            }
            if let Some(m) = mask {
                opts.model = Some(ModelSpec::Mask(parse_mask(&m)?));
            }
            if let Some(a) = alpha {
                opts.alpha = a;
            }
            if let Some(c) = criterion {
                opts.criterion = c;
            }
            let training = read_table(&data)?;
            let fut = future.as_deref().map(read_table).transpose()?;
            let report = fit_and_predict(&training, &data, fut.as_ref().zip(future.as_deref()), &opts)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out/fit-predict"));
            output::write_fit_predict(&report, Path::new(&dir))?;
            println!(
                "selected {} regressor(s): {}  delta_hat {:.4}  {} interval(s)",
                report.selected.len(),
                report.selected.join(", "),
                report.delta_hat,
                report.intervals.len()
            );
            println!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn default_verification() -> ExperimentConfig {
    ExperimentConfig::preset(Sparsity::Sparse, Scale::Reduced)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
