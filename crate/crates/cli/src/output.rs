//! CSV and JSON artifacts written under a results directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ctxbo::metrics::Aggregate;
use ctxbo::runner::{Algorithm, RunTrace};
use serde::{Deserialize, Serialize};

use crate::config::{BenchmarkConfig, Cell, Metric};
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

pub fn version_string() -> String {
    format!("ctxbo-cli v{}", env!("CARGO_PKG_VERSION"))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    ensure_parent(path)?;
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn trace_header(dx: usize, dc: usize) -> Vec<String> {
    let mut h = vec!["seed".to_string(), "iter".into(), "phase".into()];
    h.extend((0..dx).map(|i| format!("x_{i}")));
    h.extend((0..dc).map(|i| format!("c_{i}")));
    h.extend(["y".to_string(), "acq_value".into(), "wall_ms".into()]);
    h
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(trace_header(trace.dx, trace.dc))
        .map_err(|e| io_err(path, e))?;
    for r in &trace.records {
        let mut row = vec![
            trace.config.seed.to_string(),
            r.iter.to_string(),
            r.phase.name().to_string(),
        ];
        row.extend(r.x.iter().map(|&v| num(v)));
        row.extend(r.c.iter().map(|&v| num(v)));
        row.push(num(r.y));
        row.push(r.acq_value.map(num).unwrap_or_default());
        row.push(format!("{:.3}", r.wall_ms));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub seed: u64,
    pub iter: usize,
    pub phase: String,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub y: f64,
    pub acq_value: Option<f64>,
    pub wall_ms: f64,
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = r.headers().map_err(|e| io_err(path, e))?.clone();
    let dx = headers.iter().filter(|h| h.starts_with("x_")).count();
    let dc = headers.iter().filter(|h| h.starts_with("c_")).count();
    if headers != trace_header(dx, dc) {
        return Err(io_err(path, "unexpected trace columns"));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|e| io_err(path, e));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let f: Vec<&str> = rec.iter().collect();
        rows.push(TraceRow {
            seed: f[0].parse().map_err(|e| io_err(path, e))?,
            iter: f[1].parse().map_err(|e| io_err(path, e))?,
            phase: f[2].to_string(),
            x: f[3..3 + dx].iter().map(|s| parse(s)).collect::<Result<_, _>>()?,
            c: f[3 + dx..3 + dx + dc]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_, _>>()?,
            y: parse(f[3 + dx + dc])?,
            acq_value: match f[4 + dx + dc] {
                "" => None,
                s => Some(parse(s)?),
            },
            wall_ms: parse(f[5 + dx + dc])?,
        });
    }
    Ok(rows)
}

pub fn write_curve(path: &Path, seed: u64, metric: Metric, inst: &[f64], cum: &[f64]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let header = match metric {
        Metric::Regret => ["seed", "iter", "inst_regret", "cum_regret"],
        Metric::Reward => ["seed", "iter", "inst_reward", "cum_reward"],
    };
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for (i, (a, b)) in inst.iter().zip(cum).enumerate() {
        w.write_record([seed.to_string(), (i + 1).to_string(), num(*a), num(*b)])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Cumulative column of a regret or reward CSV.
pub fn read_cumulative(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        out.push(rec[3].parse::<f64>().map_err(|e| io_err(path, e))?);
    }
    Ok(out)
}

pub fn write_aggregate(path: &Path, rows: &[(Algorithm, Aggregate)]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["algorithm", "iter", "mean", "stderr", "n_seeds"])
        .map_err(|e| io_err(path, e))?;
    for (alg, agg) in rows {
        for (i, (m, s)) in agg.mean.iter().zip(&agg.stderr).enumerate() {
            w.write_record([
                alg.name().to_string(),
                (i + 1).to_string(),
                num(*m),
                num(*s),
                agg.n.to_string(),
            ])
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    #[serde(flatten)]
    pub cell: Cell,
    pub state: CellState,
    pub trace: PathBuf,
    pub error: Option<String>,
    pub total_wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub created_unix: u64,
    pub config: BenchmarkConfig,
    pub cells: Vec<CellStatus>,
}

impl Manifest {
    pub fn new(config: BenchmarkConfig, cells: Vec<CellStatus>) -> Self {
        Self {
            version: version_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config,
            cells,
        }
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| {
            CliError::Validation(format!(
                "{}: {e}; run `bench run` for this directory first",
                path.display()
            ))
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST);
        ensure_parent(&path)?;
        let text = serde_json::to_string_pretty(self).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }

    pub fn status(&self, cell: &Cell) -> Option<&CellStatus> {
        self.cells.iter().find(|s| &s.cell == cell)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredGroundTruth {
    pub problem: String,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub n_qmc: usize,
}

pub fn ground_truth_path(dir: &Path, problem: &str) -> PathBuf {
    dir.join("groundtruth").join(format!("{problem}.json"))
}

pub fn load_ground_truth(path: &Path) -> Option<StoredGroundTruth> {
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn save_ground_truth(path: &Path, gt: &StoredGroundTruth) -> Result<(), CliError> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(gt).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}
