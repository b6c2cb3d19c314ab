//! Ground truth, regret, total-variation error and cross-seed aggregation.

use crate::error::{Error, Result};
use crate::kde::KdeModel;
use crate::optim::{maximize, LbfgsOptions};
use crate::problems::{ContextDistribution, Problem};
use crate::qmc::qmc_context_samples;
use crate::rng::SeedStream;
use crate::runner::RunTrace;
use crate::sobol::sobol_in_box;

pub const DEFAULT_QMC_EXPONENT: u32 = 16;
pub const DEFAULT_TV_GRID: usize = 10_000;

/// Contexts for expectation estimates: Sobol points through the quantile
/// transform, or seeded Monte Carlo draws when no quantile exists.
pub fn context_cache(dist: &ContextDistribution, n: usize, stream: &mut SeedStream) -> Result<Vec<Vec<f64>>> {
    if dist.has_quantile() {
        qmc_context_samples(dist, n)
    } else {
        Ok((0..n).map(|_| dist.sample(stream)).collect())
    }
}

/// `(1/N) sum_j f(x, c_j)` over the given contexts.
pub fn expectation_with(problem: &Problem, x: &[f64], contexts: &[Vec<f64>]) -> Result<f64> {
    if let Some(c) = contexts.first() {
        problem.eval(x, c)?;
    }
    let sum: f64 = contexts.iter().map(|c| problem.eval_raw(x, c)).sum();
    Ok(sum / contexts.len() as f64)
}

/// The fixed context set used for ground truth and regret.
pub fn reference_contexts(dist: &ContextDistribution, n: usize) -> Result<Vec<Vec<f64>>> {
    context_cache(dist, n, &mut SeedStream::new(0).derive("mc-contexts", 0))
}

/// Expectation of the objective at `x` with `n` contexts.
pub fn expectation_qmc(problem: &Problem, x: &[f64], n: usize) -> Result<f64> {
    expectation_with(problem, x, &reference_contexts(problem.context(), n)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub problem: String,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub n_qmc: usize,
    pub contexts: Vec<Vec<f64>>,
}

impl GroundTruth {
    /// Rebuilds a ground truth from stored `x_star` and `f_star`.
    pub fn restore(problem: &Problem, x_star: Vec<f64>, f_star: f64, n: usize) -> Result<Self> {
        Ok(Self {
            problem: problem.name().to_string(),
            x_star,
            f_star,
            n_qmc: n,
            contexts: reference_contexts(problem.context(), n)?,
        })
    }

    pub fn expectation(&self, problem: &Problem, x: &[f64]) -> Result<f64> {
        expectation_with(problem, x, &self.contexts)
    }
}

/// Multi-start quasi-Newton maximization of the expectation over frozen
/// reference contexts. Starts are the best points of a Sobol scan plus
/// random points drawn from `stream`.
pub fn find_optimum(problem: &Problem, n: usize, restarts: usize, stream: &mut SeedStream) -> Result<GroundTruth> {
    let contexts = reference_contexts(problem.context(), n)?;
    let (lo, hi) = (problem.x_lower(), problem.x_upper());
    let f = |x: &[f64]| contexts.iter().map(|c| problem.eval_raw(x, c)).sum::<f64>() / contexts.len() as f64;

    let scan = sobol_in_box(lo, hi, 256)?;
    let mut scored: Vec<(f64, Vec<f64>)> = scan.into_iter().map(|x| (f(&x), x)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let half = restarts.div_ceil(2).max(1);
    let mut starts: Vec<Vec<f64>> = scored.into_iter().take(half).map(|(_, x)| x).collect();
    while starts.len() < restarts.max(1) {
        starts.push(lo.iter().zip(hi).map(|(l, h)| l + stream.uniform() * (h - l)).collect());
    }

    let opts = LbfgsOptions {
        max_iter: 200,
        pgtol: 1e-9,
        ftol: 1e-12,
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let res = maximize(f, s, lo, hi, &opts);
        let (v, x) = if res.value >= f(s) {
            (res.value, res.x)
        } else {
            (f(s), s.clone())
        };
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, x));
        }
    }
    let (f_star, x_star) = best.expect("at least one start");
    Ok(GroundTruth {
        problem: problem.name().to_string(),
        x_star,
        f_star,
        n_qmc: n,
        contexts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub seed: u64,
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretCurve {
    pub fn from_instantaneous(seed: u64, instantaneous: Vec<f64>) -> Self {
        let cumulative = instantaneous
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect();
        Self {
            seed,
            instantaneous,
            cumulative,
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// `r_t = F* - F(x_t)` for every record of the trace.
pub fn regret_curve(problem: &Problem, trace: &RunTrace, gt: &GroundTruth) -> Result<RegretCurve> {
    let inst = trace
        .records
        .iter()
        .map(|r| Ok(gt.f_star - gt.expectation(problem, &r.x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(RegretCurve::from_instantaneous(trace.config.seed, inst))
}

/// Observed rewards `y_t` and their running sum.
pub fn reward_curve(trace: &RunTrace) -> RegretCurve {
    RegretCurve::from_instantaneous(trace.config.seed, trace.records.iter().map(|r| r.y).collect())
}

/// `integral |kde - p|` over the context box by the trapezoid rule.
pub fn tv_discrepancy(kde: &KdeModel, dist: &ContextDistribution, grid_n: usize) -> Result<f64> {
    if dist.dim() != 1 || kde.dim() != 1 {
        return Err(Error::Unsupported(
            "total variation is only computed for scalar contexts".into(),
        ));
    }
    if grid_n < 2 {
        return Err(Error::Precondition("need at least two quadrature nodes".into()));
    }
    let (a, b) = (dist.lower()[0], dist.upper()[0]);
    let step = (b - a) / (grid_n - 1) as f64;
    let g = |i: usize| {
        let c = [a + i as f64 * step];
        (kde.density(&c) - dist.pdf(&c)).abs()
    };
    let inner: f64 = (1..grid_n - 1).map(g).sum();
    Ok(step * (inner + 0.5 * (g(0) + g(grid_n - 1))))
}

/// Mean and standard error of the TV error of KDEs fitted to `t` draws,
/// one fit per seed.
pub fn mean_tv(dist: &ContextDistribution, t: usize, seeds: &[u64], grid_n: usize) -> Result<(f64, f64)> {
    let tvs = seeds
        .iter()
        .map(|&s| {
            let mut stream = SeedStream::new(s).derive("tv-samples", t as u64);
            let samples: Vec<Vec<f64>> = (0..t).map(|_| dist.sample(&mut stream)).collect();
            let kde = KdeModel::fit(samples, dist.lower(), dist.upper())?;
            tv_discrepancy(&kde, dist, grid_n)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_se(&tvs))
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
}

/// Pointwise mean and standard error (sample sd over `sqrt(n)`) of
/// equal-length series.
pub fn aggregate(series: &[&[f64]]) -> Result<Aggregate> {
    let first = series
        .first()
        .ok_or_else(|| Error::Precondition("nothing to aggregate".into()))?;
    let len = first.len();
    if series.iter().any(|s| s.len() != len) {
        return Err(Error::Precondition("series differ in length".into()));
    }
    let (mut mean, mut stderr) = (Vec::with_capacity(len), Vec::with_capacity(len));
    for i in 0..len {
        let col: Vec<f64> = series.iter().map(|s| s[i]).collect();
        let (m, se) = mean_se(&col);
        mean.push(m);
        stderr.push(se);
    }
    Ok(Aggregate {
        mean,
        stderr,
        n: series.len(),
    })
}

pub fn aggregate_curves(curves: &[RegretCurve]) -> Result<Aggregate> {
    let series: Vec<&[f64]> = curves.iter().map(|c| c.cumulative.as_slice()).collect();
    aggregate(&series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::Bandwidth;
    use crate::problems::ContextLaw;

    fn uniform_problem<F>(f: F) -> Problem
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Problem::unit("t", 1, ContextDistribution::unit(ContextLaw::Uniform, 1).unwrap(), f).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let p = uniform_problem(|_, _| 2.5);
        assert_eq!(expectation_qmc(&p, &[0.3], 1024).unwrap(), 2.5);
        let p = uniform_problem(|_, c| c[0]);
        assert!((expectation_qmc(&p, &[0.3], 4096).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn separable_optimum() {
        let p = uniform_problem(|x, c| -(x[0] - 0.3).powi(2) + c[0]);
        let gt = find_optimum(&p, 1024, 4, &mut SeedStream::new(1)).unwrap();
        assert!((gt.x_star[0] - 0.3).abs() < 1e-3, "{:?}", gt.x_star);
        assert!((gt.expectation(&p, &gt.x_star).unwrap() - gt.f_star).abs() < 1e-6);
    }

    #[test]
    fn newsvendor_optimum_is_critical_fractile() {
        let p = Problem::by_name("newsvendor").unwrap();
        let gt = find_optimum(&p, 1 << 14, 6, &mut SeedStream::new(2)).unwrap();
        assert!((gt.x_star[0] - 0.18779).abs() < 0.01, "{:?}", gt.x_star);
    }

    #[test]
    fn aggregate_examples() {
        let a = [0.0, 1.0];
        let b = [2.0, 1.0];
        let agg = aggregate(&[&a, &b]).unwrap();
        assert_eq!(agg.mean, vec![1.0, 1.0]);
        assert_eq!(agg.stderr, vec![1.0, 0.0]);
        let one = aggregate(&[&a]).unwrap();
        assert_eq!(one.stderr, vec![0.0, 0.0]);
        assert!(aggregate(&[]).is_err());
        assert!(aggregate(&[&a, &[1.0]]).is_err());
    }

    #[test]
    fn regret_single_step() {
        let c = RegretCurve::from_instantaneous(0, vec![1.0 - 0.4]);
        assert!((c.total() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn tv_examples() {
        let dist = ContextDistribution::iid_normal(0.5, 0.1, 1).unwrap();
        // disjoint narrow bumps
        let narrow = ContextDistribution::iid_normal(0.2, 0.01, 1).unwrap();
        let kde =
            KdeModel::with_bandwidth(vec![vec![0.8]], Bandwidth::new(vec![0.01]).unwrap(), &[0.0], &[1.0]).unwrap();
        assert!((tv_discrepancy(&kde, &narrow, DEFAULT_TV_GRID).unwrap() - 2.0).abs() < 1e-2);
        let same =
            KdeModel::with_bandwidth(vec![vec![0.5]], Bandwidth::new(vec![0.1]).unwrap(), &[0.0], &[1.0]).unwrap();
        assert!(tv_discrepancy(&same, &dist, DEFAULT_TV_GRID).unwrap() < 1e-6);
        let d2 = ContextDistribution::iid_normal(0.5, 0.1, 2).unwrap();
        assert!(matches!(tv_discrepancy(&kde, &d2, 100), Err(Error::Unsupported(_))));
    }
}
