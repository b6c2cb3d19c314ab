//! UCB-based acquisition functions and their maximization over the decision
//! box.
//!
//! Surrogates live on the unit cube; [`UnitMap`] carries decision and
//! context coordinates there. An [`Acquisition`] freezes its Monte Carlo
//! context samples and inner grids when prepared, so its value is a
//! deterministic function of `x`.

use serde::{Deserialize, Serialize};

use crate::dro::{solve_dual, RobustInstance};
use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::kde::KdeModel;
use crate::optim::{maximize, LbfgsOptions};
use crate::rng::SeedStream;
use crate::sobol::sobol_in_box;

pub const DEFAULT_SQRT_BETA: f64 = 1.5;
pub const DEFAULT_M: usize = 1024;
pub const DEFAULT_GRID: usize = 1024;

/// Affine map from a box onto the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMap {
    lower: Vec<f64>,
    width: Vec<f64>,
}

impl UnitMap {
    pub fn new(lower: &[f64], upper: &[f64]) -> Self {
        Self {
            lower: lower.to_vec(),
            width: lower.iter().zip(upper).map(|(l, u)| u - l).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn encode_into(&self, v: &[f64], out: &mut Vec<f64>) {
        out.extend(
            v.iter()
                .zip(self.lower.iter().zip(&self.width))
                .map(|(v, (l, w))| (v - l) / w),
        );
    }

    pub fn encode(&self, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len());
        self.encode_into(v, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AcquisitionSpec {
    /// Sample average of UCB over contexts drawn from the KDE.
    ExpectedUcb { sqrt_beta: f64, m_samples: usize },
    /// Worst case of the expected UCB over a total-variation ball.
    RobustUcb {
        sqrt_beta: f64,
        m_samples: usize,
        delta: f64,
        n_inf_grid: usize,
    },
    /// UCB of a surrogate over decisions only.
    PlainUcb { sqrt_beta: f64 },
    /// Smallest UCB over a Sobol grid on a context sub-box.
    StableUcb {
        sqrt_beta: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        n_grid: usize,
    },
}

impl AcquisitionSpec {
    pub fn sqrt_beta(&self) -> f64 {
        match self {
            Self::ExpectedUcb { sqrt_beta, .. }
            | Self::RobustUcb { sqrt_beta, .. }
            | Self::PlainUcb { sqrt_beta }
            | Self::StableUcb { sqrt_beta, .. } => *sqrt_beta,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sqrt_beta() >= 0.0) {
            return Err(Error::Precondition("sqrt_beta must be non-negative".into()));
        }
        match self {
            Self::ExpectedUcb { m_samples, .. } if *m_samples == 0 => {
                Err(Error::Precondition("m_samples must be positive".into()))
            }
            Self::RobustUcb {
                m_samples,
                delta,
                n_inf_grid,
                ..
            } => {
                if *m_samples == 0 || *n_inf_grid == 0 {
                    Err(Error::Precondition("m_samples and n_inf_grid must be positive".into()))
                } else if !(*delta >= 0.0) {
                    Err(Error::Precondition("delta must be non-negative".into()))
                } else {
                    Ok(())
                }
            }
            Self::StableUcb {
                lower, upper, n_grid, ..
            } => {
                if *n_grid == 0 || lower.len() != upper.len() || lower.iter().zip(upper).any(|(l, u)| l > u) {
                    Err(Error::Precondition(
                        "stable box must be non-empty and n_grid positive".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    Fixed(f64),
    Theoretical { a: f64, b: f64, r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    PaperSchedule,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedules {
    pub beta: BetaMode,
    pub delta: DeltaMode,
}

impl Default for Schedules {
    fn default() -> Self {
        Self {
            beta: BetaMode::Fixed(DEFAULT_SQRT_BETA),
            delta: DeltaMode::PaperSchedule,
        }
    }
}

impl Schedules {
    pub fn validate(&self) -> Result<()> {
        match self.beta {
            BetaMode::Fixed(s) if !(s >= 0.0) => {
                return Err(Error::Precondition("fixed sqrt_beta must be non-negative".into()))
            }
            BetaMode::Theoretical { a, b, r } if !(a > 0.0 && b > 0.0 && r > 0.0) => {
                return Err(Error::Precondition("a, b and r must be positive".into()))
            }
            _ => {}
        }
        if let DeltaMode::Fixed(d) = self.delta {
            if !(d >= 0.0) {
                return Err(Error::Precondition("fixed delta must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn sqrt_beta(&self, t: usize, dx: usize) -> f64 {
        beta_schedule(self, t, dx)
    }

    /// Radius after `t` observed contexts.
    pub fn delta(&self, t: usize, dc: usize) -> f64 {
        match self.delta {
            DeltaMode::PaperSchedule => delta_schedule(t.max(1), dc),
            DeltaMode::Fixed(d) => d,
        }
    }
}

/// `t^(-2 / (4 + dc))`.
pub fn delta_schedule(t: usize, dc: usize) -> f64 {
    assert!(t >= 1, "delta schedule needs t >= 1");
    (t as f64).powf(-2.0 / (4.0 + dc as f64))
}

/// Square root of the exploration weight at iteration `t`.
pub fn beta_schedule(sched: &Schedules, t: usize, dx: usize) -> f64 {
    assert!(t >= 1, "beta schedule needs t >= 1");
    match sched.beta {
        BetaMode::Fixed(s) => s,
        BetaMode::Theoretical { a, b, r } => {
            let t2 = (t as f64).powi(2);
            let d = dx as f64;
            let pi = std::f64::consts::PI;
            let beta = 2.0 * (t2 / (2.0 * pi).sqrt()).ln() + 2.0 * d * (t2 * d * a * b * r * pi.sqrt() / 2.0).ln();
            beta.max(0.0).sqrt()
        }
    }
}

/// Prepared acquisition function with frozen randomness.
#[derive(Debug, Clone)]
pub struct Acquisition<'a> {
    spec: AcquisitionSpec,
    post: &'a GpPosterior,
    x_map: UnitMap,
    /// SAA samples or the stable grid, already on the unit cube.
    contexts: Vec<Vec<f64>>,
    inf_grid: Vec<Vec<f64>>,
}

impl<'a> Acquisition<'a> {
    /// `x_box` is the decision box and `c_box` the context box the surrogate
    /// was trained on.
    pub fn prepare(
        spec: &AcquisitionSpec,
        post: &'a GpPosterior,
        kde: Option<&KdeModel>,
        x_box: (&[f64], &[f64]),
        c_box: (&[f64], &[f64]),
        stream: &mut SeedStream,
    ) -> Result<Self> {
        spec.validate()?;
        let x_map = UnitMap::new(x_box.0, x_box.1);
        let c_map = UnitMap::new(c_box.0, c_box.1);
        let dc = c_map.dim();
        let need_dim = match spec {
            AcquisitionSpec::PlainUcb { .. } => x_map.dim(),
            _ => x_map.dim() + dc,
        };
        if post.dim() != need_dim {
            return Err(Error::Precondition(format!(
                "surrogate has {} inputs, acquisition needs {need_dim}",
                post.dim()
            )));
        }
        let saa = |m: usize, stream: &mut SeedStream| -> Result<Vec<Vec<f64>>> {
            let kde = kde.ok_or_else(|| Error::Precondition("a density estimate is required".into()))?;
            if kde.dim() != dc {
                return Err(Error::Precondition("density estimate has the wrong dimension".into()));
            }
            Ok(kde.sample(m, stream).iter().map(|c| c_map.encode(c)).collect())
        };
        let (contexts, inf_grid) = match spec {
            AcquisitionSpec::ExpectedUcb { m_samples, .. } => (saa(*m_samples, stream)?, Vec::new()),
            AcquisitionSpec::RobustUcb {
                m_samples, n_inf_grid, ..
            } => {
                let grid = sobol_in_box(&vec![0.0; dc], &vec![1.0; dc], *n_inf_grid)?;
                (saa(*m_samples, stream)?, grid)
            }
            AcquisitionSpec::PlainUcb { .. } => (Vec::new(), Vec::new()),
            AcquisitionSpec::StableUcb {
                lower, upper, n_grid, ..
            } => {
                if lower.len() != dc {
                    return Err(Error::Precondition("stable box has the wrong dimension".into()));
                }
                let grid = sobol_in_box(lower, upper, *n_grid)?;
                (grid.iter().map(|c| c_map.encode(c)).collect(), Vec::new())
            }
        };
        Ok(Self {
            spec: spec.clone(),
            post,
            x_map,
            contexts,
            inf_grid,
        })
    }

    pub fn spec(&self) -> &AcquisitionSpec {
        &self.spec
    }

    /// UCB at every frozen context for decision `x` (empty for the plain kind).
    pub fn context_values(&self, x: &[f64]) -> Vec<f64> {
        self.ucb_over(x, &self.contexts)
    }

    fn ucb_over(&self, x: &[f64], grid: &[Vec<f64>]) -> Vec<f64> {
        let sqrt_beta = self.spec.sqrt_beta();
        let mut z = Vec::with_capacity(self.post.dim());
        self.x_map.encode_into(x, &mut z);
        let dx = z.len();
        let mut buf = vec![0.0; self.post.len()];
        grid.iter()
            .map(|c| {
                z.truncate(dx);
                z.extend_from_slice(c);
                self.post.ucb_with(&z, sqrt_beta, &mut buf)
            })
            .collect()
    }

    /// Standard error of the sample-average UCB at `x`.
    pub fn saa_standard_error(&self, x: &[f64]) -> f64 {
        let u = self.context_values(x);
        let m = u.len();
        if m < 2 {
            return 0.0;
        }
        let mean = u.iter().sum::<f64>() / m as f64;
        let var = u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.spec {
            AcquisitionSpec::ExpectedUcb { .. } => {
                let u = self.context_values(x);
                u.iter().sum::<f64>() / u.len() as f64
            }
            AcquisitionSpec::RobustUcb { delta, .. } => {
                let u = self.context_values(x);
                let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
                let grid_min = self
                    .ucb_over(x, &self.inf_grid)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                let inst = RobustInstance::uniform(u, grid_min.min(min_u), *delta)
                    .expect("instance built from finite UCB values");
                solve_dual(&inst).value
            }
            AcquisitionSpec::PlainUcb { sqrt_beta } => self.post.ucb(&self.x_map.encode(x), *sqrt_beta),
            AcquisitionSpec::StableUcb { .. } => self.context_values(x).into_iter().fold(f64::INFINITY, f64::min),
        }
    }
}

/// One-shot evaluation: prepare with fresh samples from `stream`, then evaluate.
pub fn acq_value(
    spec: &AcquisitionSpec,
    post: &GpPosterior,
    kde: Option<&KdeModel>,
    x_box: (&[f64], &[f64]),
    c_box: (&[f64], &[f64]),
    x: &[f64],
    stream: &mut SeedStream,
) -> Result<f64> {
    Ok(Acquisition::prepare(spec, post, kde, x_box, c_box, stream)?.value(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub raw_samples: usize,
    pub num_restarts: usize,
    /// Quasi-Newton iterations per restart.
    pub max_iter: usize,
}

impl OptimizerSettings {
    pub const DEFAULT: Self = Self {
        raw_samples: 1024,
        num_restarts: 50,
        max_iter: 100,
    };
    /// Smaller search used for the robust acquisition.
    pub const ROBUST: Self = Self {
        raw_samples: 32,
        num_restarts: 5,
        max_iter: 100,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcqDiagnostic {
    /// Every refinement produced a non-finite value; the best raw point is returned.
    RefinementFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcqOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub best_raw_value: f64,
    pub diagnostic: Option<AcqDiagnostic>,
}

/// Sobol raw search followed by bounded quasi-Newton refinement of the best
/// `num_restarts` candidates.
pub fn optimize_acquisition(
    acq: &Acquisition<'_>,
    lower: &[f64],
    upper: &[f64],
    settings: &OptimizerSettings,
) -> Result<AcqOutcome> {
    if settings.num_restarts == 0 || settings.raw_samples < settings.num_restarts {
        return Err(Error::Precondition("need raw_samples >= num_restarts >= 1".into()));
    }
    let raw = sobol_in_box(lower, upper, settings.raw_samples)?;
    let mut scored: Vec<(f64, usize)> = raw.iter().enumerate().map(|(i, x)| (acq.value(x), i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (best_raw_value, best_raw) = scored[0];

    let opts = LbfgsOptions {
        max_iter: settings.max_iter,
        pgtol: 1e-8,
        ftol: 1e-9,
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for &(start_value, i) in scored.iter().take(settings.num_restarts) {
        let res = maximize(|x| acq.value(x), &raw[i], lower, upper, &opts);
        let (v, x) = if res.value.is_finite() && res.value >= start_value {
            (res.value, res.x)
        } else if start_value.is_finite() {
            (start_value, raw[i].clone())
        } else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, x));
        }
    }
    Ok(match best {
        Some((value, x)) => AcqOutcome {
            x,
            value,
            best_raw_value,
            diagnostic: None,
        },
        None => AcqOutcome {
            x: raw[best_raw].clone(),
            value: best_raw_value,
            best_raw_value,
            diagnostic: Some(AcqDiagnostic::RefinementFailed),
        },
    })
}
