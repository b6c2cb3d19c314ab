use std::path::Path;

use ctxbo::metrics::{aggregate, find_optimum, mean_tv, GroundTruth, RegretCurve, DEFAULT_TV_GRID};
use ctxbo::problems::Problem;
use ctxbo::runner::{run_problem, Algorithm};
use ctxbo::SeedStream;
use rayon::prelude::*;

use crate::config::{BenchmarkConfig, Cell, Metric};
use crate::output::{
    ground_truth_path, load_ground_truth, read_cumulative, read_trace, save_ground_truth, write_aggregate, write_curve,
    write_trace, CellState, CellStatus, Manifest, StoredGroundTruth,
};
use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
}

fn problem_for(cfg: &BenchmarkConfig, name: &str) -> Result<Problem, CliError> {
    Problem::by_name(name)
        .map(|p| p.with_noise(cfg.noise_sigma))
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn run_cell(cfg: &BenchmarkConfig, cell: &Cell) -> CellStatus {
    let dir = &cfg.output_dir;
    let path = cell.trace_path(dir);
    let rel = path.strip_prefix(dir).unwrap_or(&path).to_path_buf();
    let outcome = problem_for(cfg, &cell.problem)
        .and_then(|p| {
            run_problem(&p, &cfg.run_config(&cell.problem, cell.algorithm, cell.seed))
                .map_err(|e| CliError::Runtime(e.to_string()))
        })
        .and_then(|trace| {
            write_trace(&path, &trace)?;
            Ok(trace)
        });
    match outcome {
        Ok(trace) => CellStatus {
            cell: cell.clone(),
            state: if trace.error.is_none() {
                CellState::Complete
            } else {
                CellState::Failed
            },
            trace: rel,
            total_wall_ms: Some(trace.total_wall_ms()),
            error: trace.error,
        },
        Err(e) => CellStatus {
            cell: cell.clone(),
            state: CellState::Failed,
            trace: rel,
            error: Some(e.to_string()),
            total_wall_ms: None,
        },
    }
}

/// Runs every cell of the benchmark, skipping completed cells unless
/// `force` is set.
pub fn cmd_run(cfg: &BenchmarkConfig, force: bool, jobs: Option<usize>) -> Result<RunSummary, CliError> {
    let dir = &cfg.output_dir;
    let previous = Manifest::load(dir).ok();
    let cells = cfg.cells();
    let reusable = |cell: &Cell| -> Option<CellStatus> {
        if force {
            return None;
        }
        let st = previous.as_ref()?.status(cell)?;
        (st.state == CellState::Complete && cell.trace_path(dir).is_file()).then(|| st.clone())
    };
    let todo: Vec<&Cell> = cells.iter().filter(|c| reusable(c).is_none()).collect();

    let threads = jobs.unwrap_or(cfg.parallelism).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let fresh: Vec<CellStatus> = pool.install(|| todo.par_iter().map(|c| run_cell(cfg, c)).collect());

    let mut summary = RunSummary::default();
    let mut statuses = Vec::with_capacity(cells.len());
    let mut fresh = fresh.into_iter();
    for cell in &cells {
        let st = match reusable(cell) {
            Some(st) => {
                summary.skipped += 1;
                st
            }
            None => {
                let st = fresh.next().expect("one status per executed cell");
                summary.executed += 1;
                if st.state == CellState::Failed {
                    summary.failed += 1;
                }
                st
            }
        };
        statuses.push(st);
    }
    Manifest::new(cfg.clone(), statuses).save(dir)?;
    Ok(summary)
}

fn complete_cells(dir: &Path) -> Result<(Manifest, Vec<Cell>), CliError> {
    let manifest = Manifest::load(dir)?;
    let cells = manifest.config.cells();
    let missing: Vec<String> = cells
        .iter()
        .filter(|c| {
            !matches!(manifest.status(c), Some(s) if s.state == CellState::Complete) || !c.trace_path(dir).is_file()
        })
        .map(Cell::label)
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!(
            "missing or failed traces for {} cell(s): {}; rerun `bench run` to produce them",
            missing.len(),
            missing.join(", ")
        )));
    }
    Ok((manifest, cells))
}

/// Ground truth for a problem, cached under `groundtruth/`.
pub fn ground_truth(dir: &Path, cfg: &BenchmarkConfig, problem: &Problem) -> Result<GroundTruth, CliError> {
    let n = 1usize << cfg.qmc_exponent;
    let path = ground_truth_path(dir, problem.name());
    if let Some(st) = load_ground_truth(&path).filter(|g| g.n_qmc == n && g.problem == problem.name()) {
        return GroundTruth::restore(problem, st.x_star, st.f_star, n).map_err(|e| CliError::Runtime(e.to_string()));
    }
    let gt = find_optimum(
        problem,
        n,
        cfg.ground_truth_restarts,
        &mut SeedStream::new(0).derive("ground-truth", 0),
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    save_ground_truth(
        &path,
        &StoredGroundTruth {
            problem: gt.problem.clone(),
            x_star: gt.x_star.clone(),
            f_star: gt.f_star,
            n_qmc: n,
        },
    )?;
    Ok(gt)
}

/// Writes one regret (or reward) CSV per cell.
pub fn cmd_regret(dir: &Path) -> Result<usize, CliError> {
    let (manifest, cells) = complete_cells(dir)?;
    let cfg = &manifest.config;
    let mut written = 0;
    for name in &cfg.problems {
        let problem = problem_for(cfg, name)?;
        let metric = cfg.metric_for(&problem);
        let gt = match metric {
            Metric::Regret => Some(ground_truth(dir, cfg, &problem)?),
            Metric::Reward => None,
        };
        for cell in cells.iter().filter(|c| &c.problem == name) {
            let rows = read_trace(&cell.trace_path(dir))?;
            let inst = match &gt {
                Some(gt) => rows
                    .iter()
                    .map(|r| {
                        gt.expectation(&problem, &r.x)
                            .map(|f| gt.f_star - f)
                            .map_err(|e| CliError::Runtime(e.to_string()))
                    })
                    .collect::<Result<Vec<f64>, CliError>>()?,
                None => rows.iter().map(|r| r.y).collect(),
            };
            let curve = RegretCurve::from_instantaneous(cell.seed, inst);
            write_curve(
                &cell.regret_path(dir),
                cell.seed,
                metric,
                &curve.instantaneous,
                &curve.cumulative,
            )?;
            written += 1;
        }
    }
    Ok(written)
}

/// Writes `aggregate/<problem>.csv` from the regret CSVs.
pub fn cmd_aggregate(dir: &Path) -> Result<usize, CliError> {
    let (manifest, cells) = complete_cells(dir)?;
    let cfg = &manifest.config;
    let missing: Vec<String> = cells
        .iter()
        .filter(|c| !c.regret_path(dir).is_file())
        .map(Cell::label)
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!(
            "no regret file for {}; run `bench regret --dir {}` first",
            missing.join(", "),
            dir.display()
        )));
    }
    for name in &cfg.problems {
        let mut rows: Vec<(Algorithm, ctxbo::metrics::Aggregate)> = Vec::new();
        for alg in cfg.algorithms() {
            let series = cells
                .iter()
                .filter(|c| &c.problem == name && c.algorithm == alg)
                .map(|c| read_cumulative(&c.regret_path(dir)))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
            rows.push((alg, aggregate(&refs).map_err(|e| CliError::Runtime(e.to_string()))?));
        }
        write_aggregate(&dir.join("aggregate").join(format!("{name}.csv")), &rows)?;
    }
    Ok(cfg.problems.len())
}

/// CSV text: `problem,t,mean_tv,stderr,n_seeds`, one row per sample size.
pub fn cmd_tv(problem: &str, samples: &[usize], seeds: usize, grid_n: Option<usize>) -> Result<String, CliError> {
    let p = Problem::by_name(problem).map_err(|e| CliError::Validation(e.to_string()))?;
    if p.dc() != 1 {
        return Err(CliError::Validation(format!(
            "problem {problem} has a {}-dimensional context; total variation needs a scalar context",
            p.dc()
        )));
    }
    if seeds == 0 || samples.is_empty() || samples.contains(&0) {
        return Err(CliError::Validation(
            "need at least one seed and positive sample sizes".into(),
        ));
    }
    let seed_list: Vec<u64> = (0..seeds as u64).collect();
    let mut out = String::from("problem,t,mean_tv,stderr,n_seeds\n");
    for &t in samples {
        let (mean, se) = mean_tv(p.context(), t, &seed_list, grid_n.unwrap_or(DEFAULT_TV_GRID))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        out.push_str(&format!("{problem},{t},{mean},{se},{seeds}\n"));
    }
    Ok(out)
}
