//! Result files.
//!
//! Column orders:
//! - `replications.csv`: replication, step, size, rho_hat_sq, rho_sq, coverage, selected
//! - `summary.csv`: replication, selected_size, rho_hat_sq_sel, rho_sq_sel, coverage_sel, min_coverage, mean_gap
//! - `bounds.csv`: dgp, experiment, event, param, frequency, se, bound, bound_reported, reps, status, detail
//! - `grids.csv`: kind, checked, skipped, max_violation, worst_x, worst_y
//! - `prop21.csv`: dgp, n, m_size, reps, sigma_sq_m, ks_delta_sq, delta_sq_max_rel_dev, ks_nu, ks_sigma_hat,
//!   nu_mean, nu_se, rho_check_mean, rho_check_se, rho_mean, rho_se, expected_rho_sq, passed
//! - `intervals.csv`: row, center, lower, upper, halfwidth

use std::fmt::Write as _;
use std::path::Path;

use cpi_core::bounds::RowStatus;
use serde::Serialize;

use crate::error::{io_err, HarnessError, Result};
use crate::fitpredict::FitPredictReport;
use crate::study::StudyResult;
use crate::verify::{BoundsReport, Prop21Report};

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json { path: path.into(), source })?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_study(result: &StudyResult, dir: &Path, svg: bool) -> Result<()> {
    ensure_dir(dir)?;
    let mut w = csv::Writer::from_path(dir.join("replications.csv"))?;
    w.write_record(["replication", "step", "size", "rho_hat_sq", "rho_sq", "coverage", "selected"])?;
    for rep in &result.reports {
        for r in &rep.rows {
            w.write_record([
                rep.replication.to_string(),
                r.step.to_string(),
                r.size.to_string(),
                r.rho_hat_sq.to_string(),
                r.rho_sq.to_string(),
                r.coverage.to_string(),
                r.selected.to_string(),
            ])?;
        }
    }
    w.flush().map_err(io_err(dir))?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["replication", "selected_size", "rho_hat_sq_sel", "rho_sq_sel", "coverage_sel", "min_coverage", "mean_gap"])?;
    for rep in &result.reports {
        w.write_record([
            rep.replication.to_string(),
            rep.selected_size.to_string(),
            rep.rho_hat_sq_sel.to_string(),
            rep.rho_sq_sel.to_string(),
            rep.coverage_sel.to_string(),
            rep.min_coverage.to_string(),
            rep.mean_gap.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(dir))?;
    #[derive(Serialize)]
    struct Aggregate<'a> {
        aggregate: &'a crate::study::StudyAggregate,
        checks: &'a [crate::study::TargetCheck],
        passed: bool,
    }
    write_json(&Aggregate { aggregate: &result.aggregate, checks: &result.checks, passed: result.passed() }, &dir.join("aggregate.json"))?;
    if svg {
        let path = dir.join("path.svg");
        std::fs::write(&path, path_svg(result)).map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn write_bounds(report: &BoundsReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut w = csv::Writer::from_path(dir.join("bounds.csv"))?;
    w.write_record(["dgp", "experiment", "event", "param", "frequency", "se", "bound", "bound_reported", "reps", "status", "detail"])?;
    for r in &report.rows {
        let (status, detail) = match &r.row.status {
            RowStatus::Pass => ("pass", String::new()),
            RowStatus::Fail => ("fail", String::new()),
            RowStatus::DomainError(d) => ("domain_error", d.clone()),
        };
        w.write_record([
            r.dgp.to_string(),
            r.row.experiment.name().to_string(),
            r.row.event.clone(),
            r.row.param.to_string(),
            r.row.frequency.to_string(),
            r.row.se.to_string(),
            r.row.bound.to_string(),
            r.row.bound_reported.to_string(),
            r.row.reps.to_string(),
            status.to_string(),
            detail,
        ])?;
    }
    w.flush().map_err(io_err(dir))?;
    let mut w = csv::Writer::from_path(dir.join("grids.csv"))?;
    w.write_record(["kind", "checked", "skipped", "max_violation", "worst_x", "worst_y"])?;
    for g in &report.grids {
        w.write_record([
            g.kind.name().to_string(),
            g.checked.to_string(),
            g.skipped.to_string(),
            g.max_violation.to_string(),
            opt(g.worst_point.map(|p| p.0)),
            opt(g.worst_point.map(|p| p.1)),
        ])?;
    }
    w.flush().map_err(io_err(dir))?;
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a BoundsReport,
        passed: bool,
    }
    write_json(&Out { report, passed: report.passed() }, &dir.join("bounds.json"))
}

pub fn write_prop21(report: &Prop21Report, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut w = csv::Writer::from_path(dir.join("prop21.csv"))?;
    w.write_record([
        "dgp",
        "n",
        "m_size",
        "reps",
        "sigma_sq_m",
        "ks_delta_sq",
        "delta_sq_max_rel_dev",
        "ks_nu",
        "ks_sigma_hat",
        "nu_mean",
        "nu_se",
        "rho_check_mean",
        "rho_check_se",
        "rho_mean",
        "rho_se",
        "expected_rho_sq",
        "passed",
    ])?;
    for d in &report.dgps {
        w.write_record([
            d.dgp.to_string(),
            d.n.to_string(),
            d.m_size.to_string(),
            d.reps.to_string(),
            d.sigma_sq_m.to_string(),
            opt(d.ks_delta_sq),
            opt(d.delta_sq_max_rel_dev),
            d.ks_nu.to_string(),
            d.ks_sigma_hat.to_string(),
            d.nu_mean.mean.to_string(),
            d.nu_mean.se.to_string(),
            d.rho_check_mean.mean.to_string(),
            d.rho_check_mean.se.to_string(),
            d.rho_mean.mean.to_string(),
            d.rho_mean.se.to_string(),
            d.rho_mean.target.to_string(),
            d.passed.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(dir))?;
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a Prop21Report,
        passed: bool,
    }
    write_json(&Out { report, passed: report.passed() }, &dir.join("prop21.json"))
}

pub fn write_fit_predict(report: &FitPredictReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut w = csv::Writer::from_path(dir.join("intervals.csv"))?;
    w.write_record(["row", "center", "lower", "upper", "halfwidth"])?;
    for r in &report.intervals {
        w.write_record([r.row.to_string(), r.center.to_string(), r.lower.to_string(), r.upper.to_string(), r.halfwidth.to_string()])?;
    }
    w.flush().map_err(io_err(dir))?;
    write_json(report, &dir.join("report.json"))
}

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
}

fn panel(svg: &mut String, top: f64, title: &str, series: &[Series], ref_line: Option<f64>) {
    let (left, width, height) = (60.0, 520.0, 200.0);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).chain(ref_line);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let x_span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let map = |(x, y): (f64, f64)| (left + (x - x0) / x_span * width, top + height - (y - y0) / (y1 - y0) * height);
    let _ = writeln!(svg, r#"<rect x="{left}" y="{top}" width="{width}" height="{height}" fill="none" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="13">{title}</text>"#, left, top - 6.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10">{y1:.3}</text>"#, 4.0, top + 10.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10">{y0:.3}</text>"#, 4.0, top + height);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10">{x0}</text>"#, left, top + height + 14.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10">{x1}</text>"#, left + width - 20.0, top + height + 14.0);
    if let Some(r) = ref_line {
        let (a, b) = (map((x0, r)), map((x0 + x_span, r)));
        let _ = writeln!(svg, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#, a.0, a.1, b.0, b.1);
    }
    for (k, s) in series.iter().enumerate() {
        let pts: Vec<String> = s.points.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, s.color, pts.join(" "));
        let ly = top + 16.0 + 14.0 * k as f64;
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" font-size="11" fill="{}">{}</text>"#, left + width - 150.0, s.color, s.label);
    }
}

/// Two panels against model size along the path: replication-mean `ρ̂²` and
/// `ρ²`, and median conditional coverage with the nominal level.
pub fn path_svg(result: &StudyResult) -> String {
    let steps = result.reports.first().map_or(0, |r| r.rows.len());
    let reps = result.reports.len() as f64;
    let mut est = Vec::new();
    let mut act = Vec::new();
    let mut cov = Vec::new();
    for s in 0..steps {
        let size = result.reports[0].rows[s].size as f64;
        est.push((size, result.reports.iter().map(|r| r.rows[s].rho_hat_sq).sum::<f64>() / reps));
        act.push((size, result.reports.iter().map(|r| r.rows[s].rho_sq).sum::<f64>() / reps));
        let mut c: Vec<f64> = result.reports.iter().map(|r| r.rows[s].coverage).collect();
        c.sort_by(f64::total_cmp);
        cov.push((size, c[c.len() / 2]));
    }
    let mut svg = String::from(r#"<svg xmlns="http://www.w3.org/2000/svg" width="620" height="520" font-family="sans-serif">"#);
    svg.push('\n');
    panel(
        &mut svg,
        30.0,
        "estimated vs actual mean squared prediction error",
        &[Series { label: "estimated (mean)", color: "steelblue", points: est }, Series { label: "actual (mean)", color: "firebrick", points: act }],
        None,
    );
    panel(
        &mut svg,
        290.0,
        "conditional coverage (median) by model size",
        &[Series { label: "coverage", color: "darkgreen", points: cov }],
        Some(1.0 - result.aggregate.alpha),
    );
    svg.push_str("</svg>\n");
    svg
}
