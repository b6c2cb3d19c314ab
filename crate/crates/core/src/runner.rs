//! Sequential optimization loops producing run traces.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{
    optimize_acquisition, Acquisition, AcquisitionSpec, OptimizerSettings, Schedules, UnitMap, DEFAULT_GRID, DEFAULT_M,
};
use crate::error::{Error, Result};
use crate::gp::{train, FitOptions, GpHyperparams, TrainingSet};
use crate::kde::KdeModel;
use crate::problems::Problem;
use crate::rng::SeedStream;
use crate::sobol::sobol_points;

/// Hyperparameters are refit every iteration up to this one, then every
/// [`REFIT_EVERY`] iterations.
pub const REFIT_ALWAYS_UNTIL: usize = 50;
pub const REFIT_EVERY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SboKde,
    DrboKde,
    GpUcb,
    StableOpt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::SboKde, Self::DrboKde, Self::GpUcb, Self::StableOpt];

    pub fn name(self) -> &'static str {
        match self {
            Self::SboKde => "sbo_kde",
            Self::DrboKde => "drbo_kde",
            Self::GpUcb => "gp_ucb",
            Self::StableOpt => "stable_opt",
        }
    }

    fn uses_kde(self) -> bool {
        matches!(self, Self::SboKde | Self::DrboKde)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "algorithm",
                name: s.to_string(),
            })
    }
}

/// Optional replacements for the acquisition defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcqOverrides {
    pub m_samples: Option<usize>,
    pub raw_samples: Option<usize>,
    pub num_restarts: Option<usize>,
    pub max_iter: Option<usize>,
    pub n_inf_grid: Option<usize>,
    pub n_stable_grid: Option<usize>,
}

impl AcqOverrides {
    /// Field-wise: values set in `self` win, the rest come from `base`.
    pub fn over(self, base: AcqOverrides) -> AcqOverrides {
        AcqOverrides {
            m_samples: self.m_samples.or(base.m_samples),
            raw_samples: self.raw_samples.or(base.raw_samples),
            num_restarts: self.num_restarts.or(base.num_restarts),
            max_iter: self.max_iter.or(base.max_iter),
            n_inf_grid: self.n_inf_grid.or(base.n_inf_grid),
            n_stable_grid: self.n_stable_grid.or(base.n_stable_grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: String,
    pub algorithm: Algorithm,
    /// Total evaluation budget including initialization.
    pub budget: usize,
    /// Initial Sobol points; `None` means `2 (D_x + D_c)`.
    pub n0: Option<usize>,
    pub seed: u64,
    pub schedules: Schedules,
    pub overrides: AcqOverrides,
    pub noise_sigma: f64,
    pub gp_restarts: usize,
}

impl RunConfig {
    pub fn new(problem: impl Into<String>, algorithm: Algorithm, budget: usize, seed: u64) -> Self {
        Self {
            problem: problem.into(),
            algorithm,
            budget,
            n0: None,
            seed,
            schedules: Schedules::default(),
            overrides: AcqOverrides::default(),
            noise_sigma: 0.0,
            gp_restarts: FitOptions::default().restarts,
        }
    }

    pub fn initial_points(&self, dx: usize, dc: usize) -> usize {
        self.n0.unwrap_or(2 * (dx + dc))
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        let base = match self.algorithm {
            Algorithm::DrboKde => OptimizerSettings::ROBUST,
            _ => OptimizerSettings::DEFAULT,
        };
        OptimizerSettings {
            raw_samples: self.overrides.raw_samples.unwrap_or(base.raw_samples),
            num_restarts: self.overrides.num_restarts.unwrap_or(base.num_restarts),
            max_iter: self.overrides.max_iter.unwrap_or(base.max_iter),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Acquire,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Self::Init => "init",
            Self::Acquire => "acquire",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iter: usize,
    pub phase: Phase,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub y: f64,
    /// Maximized acquisition value; `None` during initialization.
    pub acq_value: Option<f64>,
    pub sqrt_beta: Option<f64>,
    /// Total-variation radius used by the robust acquisition.
    pub delta: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: RunConfig,
    pub dx: usize,
    pub dc: usize,
    pub records: Vec<IterationRecord>,
    /// Set when the run stopped early.
    pub error: Option<String>,
}

impl RunTrace {
    pub fn is_complete(&self) -> bool {
        self.error.is_none() && self.records.len() == self.config.budget
    }

    pub fn total_wall_ms(&self) -> f64 {
        self.records.iter().map(|r| r.wall_ms).sum()
    }
}

pub fn run(config: &RunConfig) -> Result<RunTrace> {
    let problem = Problem::by_name(&config.problem)?.with_noise(config.noise_sigma);
    run_problem(&problem, config)
}

fn validate(config: &RunConfig, n0: usize) -> Result<()> {
    if n0 < 1 || n0 > config.budget {
        return Err(Error::Precondition(format!(
            "need 1 <= n0 <= budget, got n0 = {n0}, budget = {}",
            config.budget
        )));
    }
    if !(config.noise_sigma >= 0.0) {
        return Err(Error::Precondition("noise_sigma must be non-negative".into()));
    }
    config.schedules.validate()
}

/// Per-dimension `[mean - sd, mean + sd]` of the contexts, intersected with the box.
pub fn stable_box(contexts: &[Vec<f64>], lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = contexts.len() as f64;
    let mut lo = Vec::with_capacity(lower.len());
    let mut hi = Vec::with_capacity(lower.len());
    for j in 0..lower.len() {
        let mean = contexts.iter().map(|c| c[j]).sum::<f64>() / n;
        let sd = if contexts.len() > 1 {
            (contexts.iter().map(|c| (c[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        lo.push((mean - sd).clamp(lower[j], upper[j]));
        hi.push((mean + sd).clamp(lower[j], upper[j]));
    }
    (lo, hi)
}

/// Runs `config` against an explicit problem instance (its name and noise
/// level take precedence over the config fields).
pub fn run_problem(problem: &Problem, config: &RunConfig) -> Result<RunTrace> {
    let (dx, dc) = (problem.dx(), problem.dc());
    let n0 = config.initial_points(dx, dc);
    validate(config, n0)?;
    let root = SeedStream::new(config.seed);
    let (xl, xu) = (problem.x_lower(), problem.x_upper());
    let (cl, cu) = (problem.context().lower(), problem.context().upper());
    let x_map = UnitMap::new(xl, xu);
    let c_map = UnitMap::new(cl, cu);
    let mut trace = RunTrace {
        config: config.clone(),
        dx,
        dc,
        records: Vec::with_capacity(config.budget),
        error: None,
    };

    let init = sobol_points(dx + dc, n0)?;
    for (i, u) in init.rows().enumerate() {
        let start = Instant::now();
        let t = i + 1;
        let x: Vec<f64> = (0..dx).map(|j| xl[j] + u[j] * (xu[j] - xl[j])).collect();
        let c = problem.sample_context(&mut root.derive("context", t as u64));
        let y = problem.observe(&x, &c, &mut root.derive("noise", t as u64))?;
        trace.records.push(IterationRecord {
            iter: t,
            phase: Phase::Init,
            x,
            c,
            y,
            acq_value: None,
            sqrt_beta: None,
            delta: None,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    let settings = config.optimizer_settings();
    let fit_opts = FitOptions {
        restarts: config.gp_restarts,
        ..Default::default()
    };
    let m_samples = config.overrides.m_samples.unwrap_or(DEFAULT_M);
    let mut hyper: Option<GpHyperparams> = None;
    for t in n0 + 1..=config.budget {
        let start = Instant::now();
        let past = &trace.records;
        let contexts: Vec<Vec<f64>> = past.iter().map(|r| r.c.clone()).collect();

        let mut set = TrainingSet::new(if config.algorithm == Algorithm::GpUcb {
            dx
        } else {
            dx + dc
        });
        for r in past {
            let mut z = x_map.encode(&r.x);
            if config.algorithm != Algorithm::GpUcb {
                c_map.encode_into(&r.c, &mut z);
            }
            set.push(&z, r.y)?;
        }
        let refit = hyper.is_none() || t <= REFIT_ALWAYS_UNTIL || t % REFIT_EVERY == 0;
        let surrogate = match train(
            &set,
            &fit_opts,
            hyper.as_ref(),
            refit,
            &mut root.derive("fit", t as u64),
        ) {
            Ok(s) => s,
            Err(e) => {
                trace.error = Some(format!("iteration {t}: {e}"));
                return Ok(trace);
            }
        };
        hyper = Some(surrogate.fit.hyper.clone());

        let sqrt_beta = config.schedules.sqrt_beta(t, dx);
        let mut delta = None;
        let spec = match config.algorithm {
            Algorithm::SboKde => AcquisitionSpec::ExpectedUcb { sqrt_beta, m_samples },
            Algorithm::DrboKde => {
                let d = config.schedules.delta(contexts.len(), dc);
                delta = Some(d);
                AcquisitionSpec::RobustUcb {
                    sqrt_beta,
                    m_samples,
                    delta: d,
                    n_inf_grid: config.overrides.n_inf_grid.unwrap_or(DEFAULT_GRID),
                }
            }
            Algorithm::GpUcb => AcquisitionSpec::PlainUcb { sqrt_beta },
            Algorithm::StableOpt => {
                let (lower, upper) = stable_box(&contexts, cl, cu);
                AcquisitionSpec::StableUcb {
                    sqrt_beta,
                    lower,
                    upper,
                    n_grid: config.overrides.n_stable_grid.unwrap_or(DEFAULT_GRID),
                }
            }
        };
        let kde = if config.algorithm.uses_kde() {
            Some(KdeModel::fit(contexts, cl, cu)?)
        } else {
            None
        };
        let acq = Acquisition::prepare(
            &spec,
            &surrogate.posterior,
            kde.as_ref(),
            (xl, xu),
            (cl, cu),
            &mut root.derive("saa", t as u64),
        )?;
        let outcome = optimize_acquisition(&acq, xl, xu, &settings)?;

        let c = problem.sample_context(&mut root.derive("context", t as u64));
        let y = problem.observe(&outcome.x, &c, &mut root.derive("noise", t as u64))?;
        trace.records.push(IterationRecord {
            iter: t,
            phase: Phase::Acquire,
            x: outcome.x,
            c,
            y,
            acq_value: Some(outcome.value),
            sqrt_beta: Some(sqrt_beta),
            delta,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(trace)
}
