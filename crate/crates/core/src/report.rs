//! Running configured checks and writing their results as CSV and JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Result, SpliceError};
use crate::harness::{fit_rate, run_check, CheckId, CheckResult, CheckSpec, Param, RateFit, RateModel, Sweep};

pub const RESULTS_CSV: &str = "results.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// A check that did not run, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub check_id: CheckId,
    pub reason: String,
}

/// Per-check tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check_id: CheckId,
    pub rows: usize,
    pub failures: usize,
    pub pass: bool,
}

/// A rate fitted to one quantity of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub quantity: String,
    pub fit: RateFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub all_pass: bool,
    pub checks: Vec<CheckSummary>,
    pub skipped: Vec<Skipped>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<SweepFit>,
    pub results: Vec<CheckResult>,
}

impl RunReport {
    fn assemble(results: Vec<CheckResult>, skipped: Vec<Skipped>, ids: &[CheckId]) -> Self {
        let checks: Vec<CheckSummary> = ids
            .iter()
            .filter(|id| !skipped.iter().any(|s| s.check_id == **id))
            .map(|&id| {
                let rows: Vec<&CheckResult> = results.iter().filter(|r| r.check_id == id).collect();
                let failures = rows.iter().filter(|r| !r.pass).count();
                CheckSummary {
                    check_id: id,
                    rows: rows.len(),
                    failures,
                    pass: failures == 0 && !rows.is_empty(),
                }
            })
            .collect();
        Self {
            all_pass: checks.iter().all(|c| c.pass),
            checks,
            skipped,
            sweep: None,
            fits: Vec::new(),
            results,
        }
    }
}

fn run_one(spec: &CheckSpec, cfg: &RunConfig, results: &mut Vec<CheckResult>, skipped: &mut Vec<Skipped>) {
    match run_check(spec, cfg) {
        Ok(rows) => results.extend(rows),
        Err(SpliceError::Infeasible(reason)) => skipped.push(Skipped {
            check_id: spec.id,
            reason,
        }),
        Err(e) => results.push(CheckResult::error(spec.id, cfg.point(), &e)),
    }
}

/// Run every enabled check. Configuration errors are returned; numerical failures
/// become failed rows and checks the regime cannot run are listed as skipped.
pub fn verify(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let specs = cfg.enabled_checks()?;
    let (mut results, mut skipped) = (Vec::new(), Vec::new());
    for spec in &specs {
        run_one(spec, cfg, &mut results, &mut skipped);
    }
    let ids: Vec<CheckId> = specs.iter().map(|s| s.id).collect();
    Ok(RunReport::assemble(results, skipped, &ids))
}

/// Run one check over an explicit sweep and fit rates to each swept quantity.
pub fn sweep(cfg: &RunConfig, id: CheckId, sweep: Sweep, tolerance: Option<f64>) -> Result<RunReport> {
    cfg.validate()?;
    if sweep.values.is_empty() {
        return Err(SpliceError::InvalidParameter("sweep has no values".into()));
    }
    let tolerance = tolerance.or_else(|| cfg.checks.get(id.as_str()).and_then(|c| c.tolerance));
    let spec = CheckSpec {
        id,
        tolerance,
        sweep: Some(sweep.clone()),
    };
    if sweep.param == Param::SmallR && id.native_param() != Some(Param::SmallR) {
        return Err(SpliceError::InvalidParameter(format!("{id} does not depend on the profile radius r")));
    }
    let (mut results, mut skipped) = (Vec::new(), Vec::new());
    run_one(&spec, cfg, &mut results, &mut skipped);
    let mut report = RunReport::assemble(results, skipped, &[id]);
    report.fits = sweep_fits(&report.results, sweep.param);
    report.sweep = Some(sweep);
    Ok(report)
}

/// Fits of every model to every quantity that admits one.
fn sweep_fits(results: &[CheckResult], param: Param) -> Vec<SweepFit> {
    let mut quantities: Vec<&str> = results.iter().map(|r| r.quantity.as_str()).collect();
    quantities.sort_unstable();
    quantities.dedup();
    let mut fits = Vec::new();
    for q in quantities {
        for model in [RateModel::Power, RateModel::Exp, RateModel::Log] {
            if let Ok(fit) = fit_rate(results, q, param, model) {
                fits.push(SweepFit {
                    quantity: q.to_string(),
                    fit,
                });
            }
        }
    }
    fits
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// CSV with one row per result; numbers in `{:.12e}`, so identical runs give identical bytes.
pub fn write_csv<W: Write>(results: &[CheckResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| SpliceError::InvalidParameter(format!("csv: {e}"));
    w.write_record([
        "check_id", "R", "theta", "delta", "k", "p", "l", "d", "seed", "measured", "bound", "pass", "quantity", "formula",
    ])
    .map_err(io)?;
    for r in results {
        let p = &r.point;
        w.write_record([
            r.check_id.as_str().to_string(),
            num(p.r),
            num(p.theta),
            num(p.delta),
            p.k.to_string(),
            num(p.p),
            num(p.l),
            num(p.d),
            p.seed.map(|s| s.to_string()).unwrap_or_default(),
            num(r.measured),
            num(r.bound),
            r.pass.to_string(),
            r.quantity.clone(),
            r.formula.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| SpliceError::InvalidParameter(format!("csv: {e}")))?;
    Ok(())
}

pub fn to_csv_string(results: &[CheckResult]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(results, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn to_json_string(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

fn io_err(path: &Path, e: std::io::Error) -> SpliceError {
    SpliceError::InvalidParameter(format!("cannot write {}: {e}", path.display()))
}

/// Write the results as CSV and the whole report as JSON, creating parent directories.
pub fn write_report(report: &RunReport, csv_path: &Path, json_path: &Path) -> Result<()> {
    for path in [csv_path, json_path] {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    std::fs::write(csv_path, to_csv_string(&report.results)?).map_err(|e| io_err(csv_path, e))?;
    std::fs::write(json_path, to_json_string(report)).map_err(|e| io_err(json_path, e))?;
    Ok(())
}

/// `results.csv` and `summary.json` of a `verify` run in `dir`.
pub fn verify_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join(RESULTS_CSV), dir.join(SUMMARY_JSON))
}

/// `sweep_<check>_<param>.csv` and `.json` in `dir`.
pub fn sweep_paths(dir: &Path, id: CheckId, param: Param) -> (PathBuf, PathBuf) {
    let stem = format!("sweep_{}_{}", id.as_str(), param.as_str());
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

/// Read a report written by [`write_report`].
pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SpliceError::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| SpliceError::InvalidParameter(format!("{}: {e}", path.display())))
}
