//! Real-data entry point: read a training table, select a model, and emit
//! prediction intervals for new regressor rows.
//!
//! Tables are UTF-8 CSV with a header row. In the training table the first
//! column is the response and the remaining `p` columns are regressors; the
//! intercept is added automatically. Future tables hold the `p` regressor
//! columns only.

use std::path::Path;

use cpi_core::lsq::{criterion_value, fit_model, Criterion};
use cpi_core::modelsel::{greedy_block_path, select_min, select_on_path_by, EliminationStrategy};
use cpi_core::predict::{estimated_law, prediction_interval};
use cpi_core::{BlockPartition, Matrix64, ModelCollection, ModelMask, TrainingSample64};
use serde::{Deserialize, Serialize};

use crate::config::BlockSpec;
use crate::error::{io_err, HarnessError, Result};

/// How the model is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    /// Fixed model: 1-based regressor positions (intercept implied).
    Mask(Vec<usize>),
    /// Minimize the criterion over an explicit collection.
    Collection(ModelCollection),
    /// Greedy elimination over contiguous blocks, then minimize the criterion
    /// along the path.
    Blocks(BlockSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPredictOptions {
    /// Defaults to one block per regressor.
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_criterion")]
    pub criterion: Criterion,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_criterion() -> Criterion {
    Criterion::RhoHatSq
}

impl Default for FitPredictOptions {
    fn default() -> Self {
        Self { model: None, alpha: default_alpha(), criterion: default_criterion() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    /// 1-based row of the future table.
    pub row: usize,
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPredictReport {
    pub n: usize,
    pub p: usize,
    /// Selected regressors by column name, in table order.
    pub selected: Vec<String>,
    pub selected_positions: Vec<usize>,
    pub size: usize,
    pub criterion: Criterion,
    pub criterion_value: f64,
    pub sigma_hat_sq: f64,
    pub rho_hat_sq: f64,
    pub delta_hat: f64,
    pub coefficients: Vec<f64>,
    pub alpha: f64,
    /// `δ̂ = 0`: the intervals collapse to points.
    pub degenerate: bool,
    pub intervals: Vec<IntervalRow>,
}

/// Numeric table with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Reads a numeric CSV table, naming the row and column of any bad cell.
pub fn read_table(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(HarnessError::Table { path: path.into(), detail: "missing header row".into() });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != header.len() {
            return Err(HarnessError::Cell {
                path: path.into(),
                row,
                col: record.len().min(header.len()) + 1,
                detail: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                let cell = cell.trim();
                let bad = |detail: String| HarnessError::Cell { path: path.into(), row, col: j + 1, detail };
                if cell.is_empty() {
                    return Err(bad("missing value".into()));
                }
                let v: f64 = cell.parse().map_err(|_| bad(format!("not a number: {cell:?}")))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite value {cell:?}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok(Table { header, rows })
}

/// Training sample from a table whose first column is the response.
pub fn sample_from_table(table: &Table, path: &Path) -> Result<TrainingSample64> {
    let n = table.rows.len();
    let p = table.header.len().saturating_sub(1);
    if p == 0 {
        return Err(HarnessError::Table { path: path.into(), detail: "need a response column and at least one regressor".into() });
    }
    if n < 3 {
        return Err(HarnessError::Table { path: path.into(), detail: format!("need at least 3 data rows, found {n}") });
    }
    let x = Matrix64::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { table.rows[i][j] });
    let y = table.rows.iter().map(|r| r[0]).collect();
    Ok(TrainingSample64::new(x, y)?)
}

/// Writes a sample in the training-table layout.
pub fn write_training_csv(sample: &TrainingSample64, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["y".to_string()];
    header.extend((1..=sample.p()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..sample.n() {
        let mut rec = vec![sample.y()[i].to_string()];
        rec.extend(sample.x().row(i)[1..].iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Chooses the model described by `spec` for this sample.
pub fn choose_model(sample: &TrainingSample64, spec: &ModelSpec, criterion: Criterion) -> Result<ModelMask> {
    let p = sample.p();
    let mask = match spec {
        ModelSpec::Mask(idx) => ModelMask::from_indices(p, idx)?,
        ModelSpec::Collection(coll) => {
            if coll.p() != p {
                return Err(HarnessError::Config(format!("collection is over p = {} regressors, data has {p}", coll.p())));
            }
            select_min(sample, coll, criterion)?.mask
        }
        ModelSpec::Blocks(b) => {
            if b.count == 0 || b.width == 0 || b.count * b.width > p {
                return Err(HarnessError::Config(format!("{} blocks of {} do not fit p = {p}", b.count, b.width)));
            }
            let blocks = BlockPartition::contiguous(b.count, b.width)?.with_p(p)?;
            let path = greedy_block_path(sample, &blocks, EliminationStrategy::Downdate)?;
            select_on_path_by(sample.n(), &path, criterion)?.mask
        }
    };
    mask.check_size(sample.n())?;
    Ok(mask)
}

/// Fits, selects and predicts. `future` rows must hold `p` regressor values.
pub fn fit_and_predict(
    training: &Table,
    training_path: &Path,
    future: Option<(&Table, &Path)>,
    opts: &FitPredictOptions,
) -> Result<FitPredictReport> {
    let sample = sample_from_table(training, training_path)?;
    let (n, p) = (sample.n(), sample.p());
    let spec = opts.model.clone().unwrap_or(ModelSpec::Blocks(BlockSpec { count: p, width: 1 }));
    let mask = choose_model(&sample, &spec, opts.criterion)?;
    let fit = fit_model(&sample, &mask)?;
    let law = estimated_law(&fit);
    let mut intervals = Vec::new();
    if let Some((table, path)) = future {
        if table.header.len() != p {
            return Err(HarnessError::Table {
                path: path.into(),
                detail: format!("future rows need the {p} regressor columns, found {}", table.header.len()),
            });
        }
        for (i, row) in table.rows.iter().enumerate() {
            let mut x_f = Vec::with_capacity(p + 1);
            x_f.push(1.0);
            x_f.extend_from_slice(row);
            let pi = prediction_interval(&fit, &x_f, opts.alpha)?;
            intervals.push(IntervalRow { row: i + 1, center: pi.center, lower: pi.lower(), upper: pi.upper(), halfwidth: pi.halfwidth });
        }
    } else {
        // validates alpha even without future rows
        cpi_core::predict::two_sided_quantile(opts.alpha)?;
    }
    let positions = mask.indices().into_iter().filter(|&j| j > 0).collect::<Vec<_>>();
    Ok(FitPredictReport {
        n,
        p,
        selected: positions.iter().map(|&j| training.header[j].clone()).collect(),
        selected_positions: positions,
        size: mask.size(),
        criterion: opts.criterion,
        criterion_value: criterion_value(&fit, opts.criterion),
        sigma_hat_sq: fit.sigma_hat_sq,
        rho_hat_sq: criterion_value(&fit, Criterion::RhoHatSq),
        delta_hat: law.law.sd,
        coefficients: fit.beta_hat.clone(),
        alpha: opts.alpha,
        degenerate: law.degenerate,
        intervals,
    })
}
