//! Result tables, convergence histories and the JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::runner::{BenchReport, RunRecord};

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub configuration: String,
    pub time_s: f64,
    /// `100 · (1 − time_s / slowest time_s)` within the problem.
    pub accel_pct: f64,
    pub cycle_ct: usize,
    pub iter_ct: usize,
    pub a_ct: u64,
    pub v_ct: u64,
    pub sync_ct: u64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub cycle: usize,
    pub iter: usize,
    pub relres_est: f64,
    pub relerr: Option<f64>,
    pub kappa: Option<f64>,
    pub loo: Option<f64>,
}

/// Rows grouped by problem in input order, slowest first within a problem.
pub fn result_rows(report: &BenchReport) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for p in &report.problems {
        let slowest = p.runs.iter().map(|r| r.time_s).fold(0.0f64, f64::max);
        let mut block: Vec<ResultRow> = p
            .runs
            .iter()
            .map(|r| ResultRow {
                problem: p.name.clone(),
                configuration: r.label.clone(),
                time_s: r.time_s,
                accel_pct: if slowest > 0.0 { 100.0 * (1.0 - r.time_s / slowest) } else { 0.0 },
                cycle_ct: r.cycles,
                iter_ct: r.iterations,
                a_ct: r.counters.matvec,
                v_ct: r.counters.basis_eval,
                sync_ct: r.counters.sync(),
                status: r.status.label().to_string(),
            })
            .collect();
        block.sort_by(|a, b| b.time_s.total_cmp(&a.time_s).then_with(|| a.configuration.cmp(&b.configuration)));
        rows.extend(block);
    }
    rows
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record([
            "problem",
            "configuration",
            "time_s",
            "accel_pct",
            "cycle_ct",
            "iter_ct",
            "a_ct",
            "v_ct",
            "sync_ct",
            "status",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn history_rows(run: &RunRecord) -> Vec<HistoryRow> {
    run.history
        .iter()
        .map(|h| HistoryRow {
            cycle: h.cycle,
            iter: h.iteration,
            relres_est: h.relres_est,
            relerr: h.relerr,
            kappa: h.kappa,
            loo: h.loo,
        })
        .collect()
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub fn history_path(dir: &Path, configuration: &str, problem: &str) -> PathBuf {
    dir.join(format!("history_{}_{}.csv", sanitize(configuration), sanitize(problem)))
}

pub fn write_history(path: &Path, rows: &[HistoryRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(["cycle", "iter", "relres_est", "relerr", "kappa", "loo"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `results.csv`, one history file per run and `summary.json`.
pub fn emit(dir: &Path, report: &BenchReport) -> anyhow::Result<Vec<ResultRow>> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let rows = result_rows(report);
    write_results(&dir.join("results.csv"), &rows)?;
    for p in &report.problems {
        for run in &p.runs {
            write_history(&history_path(dir, &run.label, &p.name), &history_rows(run))?;
        }
    }
    let summary = dir.join("summary.json");
    let json = serde_json::to_string_pretty(report)?;
    fs::write(&summary, json).with_context(|| format!("writing {}", summary.display()))?;
    Ok(rows)
}
