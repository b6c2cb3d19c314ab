use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ctxbo::acquisition::Schedules;
use ctxbo::problems::{Problem, PROBLEM_NAMES};
use ctxbo::runner::{AcqOverrides, Algorithm, RunConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Regret,
    Reward,
}

impl Metric {
    /// Problems without a quantile transform report reward by default.
    pub fn default_for(problem: &Problem) -> Self {
        if problem.context().has_quantile() {
            Self::Regret
        } else {
            Self::Reward
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (100..105).collect()
}

fn default_qmc_exponent() -> u32 {
    ctxbo::metrics::DEFAULT_QMC_EXPONENT
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_parallelism() -> usize {
    1
}

fn default_gp_restarts() -> usize {
    5
}

fn default_gt_restarts() -> usize {
    8
}

/// Benchmark description as read from JSON. Names are kept as strings so
/// that validation can point at the offending entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub problems: Vec<String>,
    pub algorithms: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(alias = "T")]
    pub budget: usize,
    #[serde(default)]
    pub n0: Option<usize>,
    #[serde(default = "default_qmc_exponent")]
    pub qmc_exponent: u32,
    /// `None` picks per problem, see [`Metric::default_for`].
    #[serde(default)]
    pub metric: Option<Metric>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub schedules: Schedules,
    #[serde(default)]
    pub overrides: AcqOverrides,
    /// Per-algorithm overrides, keyed by algorithm name, layered over `overrides`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub algorithm_overrides: BTreeMap<String, AcqOverrides>,
    #[serde(default = "default_gp_restarts")]
    pub gp_restarts: usize,
    #[serde(default = "default_gt_restarts")]
    pub ground_truth_restarts: usize,
}

impl BenchmarkConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file; a relative `output_dir` is taken relative to the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if self.problems.is_empty() {
            return bad("problems: must not be empty".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithms: must not be empty".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds: must not be empty".into());
        }
        for (i, p) in self.problems.iter().enumerate() {
            if !PROBLEM_NAMES.contains(&p.as_str()) {
                return bad(format!(
                    "problems[{i}]: unknown problem \"{p}\" (expected one of {})",
                    PROBLEM_NAMES.join(", ")
                ));
            }
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if a.parse::<Algorithm>().is_err() {
                let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                return bad(format!(
                    "algorithms[{i}]: unknown algorithm \"{a}\" (expected one of {})",
                    names.join(", ")
                ));
            }
        }
        for name in self.algorithm_overrides.keys() {
            if name.parse::<Algorithm>().is_err() {
                return bad(format!("algorithm_overrides: unknown algorithm \"{name}\""));
            }
        }
        if self.parallelism == 0 {
            return bad("parallelism: must be at least 1".into());
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return bad("noise_sigma: must be non-negative".into());
        }
        if self.qmc_exponent == 0 || self.qmc_exponent > 24 {
            return bad("qmc_exponent: must lie in 1..=24".into());
        }
        for p in &self.problems {
            let problem = Problem::by_name(p).map_err(|e| CliError::Validation(e.to_string()))?;
            let n0 = self.n0.unwrap_or(2 * (problem.dx() + problem.dc()));
            if n0 == 0 || self.budget <= n0 {
                return bad(format!("budget: must exceed n0 = {n0} (problem {p})"));
            }
        }
        self.schedules
            .validate()
            .map_err(|e| CliError::Validation(format!("schedules: {e}")))
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.algorithms.iter().map(|a| a.parse().expect("validated")).collect()
    }

    pub fn metric_for(&self, problem: &Problem) -> Metric {
        self.metric.unwrap_or_else(|| Metric::default_for(problem))
    }

    pub fn overrides_for(&self, algorithm: Algorithm) -> AcqOverrides {
        self.algorithm_overrides
            .get(algorithm.name())
            .map_or(self.overrides, |o| o.over(self.overrides))
    }

    pub fn run_config(&self, problem: &str, algorithm: Algorithm, seed: u64) -> RunConfig {
        RunConfig {
            problem: problem.to_string(),
            algorithm,
            budget: self.budget,
            n0: self.n0,
            seed,
            schedules: self.schedules,
            overrides: self.overrides_for(algorithm),
            noise_sigma: self.noise_sigma,
            gp_restarts: self.gp_restarts,
        }
    }

    /// Every (problem, algorithm, seed) cell in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for p in &self.problems {
            for a in self.algorithms() {
                for &s in &self.seeds {
                    out.push(Cell {
                        problem: p.clone(),
                        algorithm: a,
                        seed: s,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub problem: String,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl Cell {
    pub fn trace_path(&self, root: &Path) -> PathBuf {
        root.join("traces")
            .join(&self.problem)
            .join(self.algorithm.name())
            .join(format!("seed_{}.csv", self.seed))
    }

    pub fn regret_path(&self, root: &Path) -> PathBuf {
        root.join("regret")
            .join(&self.problem)
            .join(self.algorithm.name())
            .join(format!("seed_{}.csv", self.seed))
    }

    pub fn label(&self) -> String {
        format!("{}/{}/seed {}", self.problem, self.algorithm, self.seed)
    }
}
