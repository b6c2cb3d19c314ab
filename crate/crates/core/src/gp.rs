//! Gaussian-process regression with a Matérn-5/2 ARD kernel and zero prior
//! mean.
//!
//! Inputs are expected on the unit cube. [`GpPosterior::fit`] conditions on
//! raw targets; [`train`] standardizes the targets, fits hyperparameters by
//! maximizing the log marginal likelihood and returns a posterior that
//! reports predictions on the original scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::optim::{minimize_with_gradient, LbfgsOptions};
use crate::rng::SeedStream;

const SQRT5: f64 = 2.236_067_977_499_79;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const SIGNAL_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const NOISE_BOUNDS: (f64, f64) = (1e-6, 1.0);
pub const DEFAULT_NOISE: f64 = 1e-2;
pub const JITTER_LADDER: [f64; 3] = [1e-8, 1e-6, 1e-4];

#[derive(Debug, Clone, PartialEq)]
pub struct GpHyperparams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl GpHyperparams {
    /// Unit lengthscales, unit signal, noise 1e-2.
    pub fn defaults(dim: usize) -> Self {
        Self {
            lengthscales: vec![1.0; dim],
            signal_variance: 1.0,
            noise_variance: DEFAULT_NOISE,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn validate(&self) -> Result<()> {
        if self.lengthscales.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Precondition("lengthscales must be positive".into()));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::Precondition("signal variance must be positive".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::Precondition("noise variance must be non-negative".into()));
        }
        Ok(())
    }

    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.max(NOISE_BOUNDS.0).ln());
        v
    }

    fn from_log(theta: &[f64]) -> Self {
        let d = theta.len() - 2;
        Self {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_variance: theta[d].exp(),
            noise_variance: theta[d + 1].exp(),
        }
    }

    fn log_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![LENGTHSCALE_BOUNDS.0.ln(); dim];
        let mut hi = vec![LENGTHSCALE_BOUNDS.1.ln(); dim];
        lo.push(SIGNAL_BOUNDS.0.ln());
        hi.push(SIGNAL_BOUNDS.1.ln());
        lo.push(NOISE_BOUNDS.0.ln());
        hi.push(NOISE_BOUNDS.1.ln());
        (lo, hi)
    }
}

/// Matérn-5/2 covariance as a function of the scaled distance `r`.
#[inline]
fn matern52(signal: f64, r: f64) -> f64 {
    let s = SQRT5 * r;
    signal * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Kernel value between two raw points.
pub fn kernel(hyper: &GpHyperparams, a: &[f64], b: &[f64]) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&hyper.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    matern52(hyper.signal_variance, r2.sqrt())
}

/// Training inputs as a row-major matrix plus targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.len() != targets.len() {
            return Err(Error::Precondition("inputs and targets differ in length".into()));
        }
        let mut set = Self::new(dim);
        for (r, &y) in rows.iter().zip(targets) {
            set.push(r, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, z: &[f64], y: f64) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::Precondition(format!(
                "input of dimension {} in a {}-dimensional training set",
                z.len(),
                self.dim
            )));
        }
        self.inputs.extend_from_slice(z);
        self.targets.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn all_inputs_identical(&self) -> bool {
        (1..self.len()).all(|i| self.input(i) == self.input(0))
    }
}

/// Lower Cholesky factor of `k + jitter I`, escalating the jitter on failure.
fn cholesky_with_jitter(k: &DMatrix<f64>, scale: f64) -> Result<(DMatrix<f64>, f64)> {
    if let Some(ch) = k.clone().cholesky() {
        return Ok((ch.unpack(), 0.0));
    }
    for &j in &JITTER_LADDER {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += j * scale;
        }
        if let Some(ch) = kj.cholesky() {
            return Ok((ch.unpack(), j * scale));
        }
    }
    Err(Error::Numerical(format!(
        "kernel matrix not positive definite after jitter {:e}",
        JITTER_LADDER[JITTER_LADDER.len() - 1]
    )))
}

fn gram(set: &TrainingSet, hyper: &GpHyperparams) -> DMatrix<f64> {
    let n = set.len();
    let scaled = scaled_inputs(set, hyper);
    let d = set.dim();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hyper.signal_variance + hyper.noise_variance;
        for j in 0..i {
            let r2: f64 = (0..d).map(|t| (scaled[i * d + t] - scaled[j * d + t]).powi(2)).sum();
            let v = matern52(hyper.signal_variance, r2.sqrt());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn scaled_inputs(set: &TrainingSet, hyper: &GpHyperparams) -> Vec<f64> {
    let d = set.dim();
    set.inputs
        .iter()
        .enumerate()
        .map(|(i, v)| v / hyper.lengthscales[i % d])
        .collect()
}

/// Forward substitution `L v = b` in place, `L` lower-triangular column-major.
#[inline]
fn forward_solve(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    let data = l.as_slice();
    for j in 0..n {
        let col = &data[j * n..(j + 1) * n];
        let v = b[j] / col[j];
        b[j] = v;
        if v != 0.0 {
            for (bi, li) in b[j + 1..].iter_mut().zip(&col[j + 1..]) {
                *bi -= v * li;
            }
        }
    }
}

/// Conditioned GP: answers mean and variance queries.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    hyper: GpHyperparams,
    dim: usize,
    n: usize,
    /// Training inputs divided by the lengthscales, row-major.
    scaled: Vec<f64>,
    inv_lengthscales: Vec<f64>,
    chol: DMatrix<f64>,
    weights: Vec<f64>,
    jitter: f64,
    y_offset: f64,
    y_scale: f64,
}

impl GpPosterior {
    /// Posterior of a zero-mean GP conditioned on raw targets.
    pub fn fit(set: &TrainingSet, hyper: &GpHyperparams) -> Result<Self> {
        Self::fit_scaled(set, hyper, 0.0, 1.0)
    }

    /// The unconditioned prior.
    pub fn prior(hyper: &GpHyperparams) -> Self {
        Self::fit(&TrainingSet::new(hyper.dim()), hyper).expect("prior is always valid")
    }

    /// Condition on `(y - offset) / scale`; predictions are mapped back.
    pub fn fit_scaled(set: &TrainingSet, hyper: &GpHyperparams, y_offset: f64, y_scale: f64) -> Result<Self> {
        hyper.validate()?;
        if hyper.dim() != set.dim() && !set.is_empty() {
            return Err(Error::Precondition(format!(
                "{} lengthscales for {}-dimensional inputs",
                hyper.dim(),
                set.dim()
            )));
        }
        let n = set.len();
        let (chol, jitter) = if n == 0 {
            (DMatrix::zeros(0, 0), 0.0)
        } else {
            cholesky_with_jitter(&gram(set, hyper), hyper.signal_variance)?
        };
        let mut weights: Vec<f64> = set.targets.iter().map(|y| (y - y_offset) / y_scale).collect();
        if n > 0 {
            let ch = DMatrix::from_column_slice(n, 1, &weights);
            let lower = chol.clone();
            let mut w = ch;
            lower.solve_lower_triangular_mut(&mut w);
            lower.tr_solve_lower_triangular_mut(&mut w);
            weights = w.as_slice().to_vec();
        }
        Ok(Self {
            dim: hyper.dim(),
            n,
            scaled: scaled_inputs(set, hyper),
            inv_lengthscales: hyper.lengthscales.iter().map(|l| 1.0 / l).collect(),
            hyper: hyper.clone(),
            chol,
            weights,
            jitter,
            y_offset,
            y_scale,
        })
    }

    pub fn hyper(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Jitter that was added to the diagonal to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of the (jittered) `K + noise I`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    fn cross_kernel(&self, z: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let mut stack = [0.0f64; 16];
        let mut heap = Vec::new();
        let zs: &mut [f64] = if d <= stack.len() {
            &mut stack[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap
        };
        for t in 0..d {
            zs[t] = z[t] * self.inv_lengthscales[t];
        }
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.scaled[i * d..(i + 1) * d];
            let mut r2 = 0.0;
            for t in 0..d {
                let diff = zs[t] - row[t];
                r2 += diff * diff;
            }
            *o = matern52(self.hyper.signal_variance, r2.sqrt());
        }
    }

    /// Posterior mean and variance at `z` (variance clamped at 0).
    pub fn mean_var(&self, z: &[f64]) -> (f64, f64) {
        let mut buf = vec![0.0; self.n];
        self.mean_var_with(z, &mut buf)
    }

    /// As [`mean_var`](Self::mean_var) with a caller-provided scratch buffer
    /// of length `len()`.
    pub fn mean_var_with(&self, z: &[f64], buf: &mut [f64]) -> (f64, f64) {
        debug_assert_eq!(z.len(), self.dim);
        let prior = self.hyper.signal_variance;
        if self.n == 0 {
            return (self.y_offset, prior * self.y_scale * self.y_scale);
        }
        self.cross_kernel(z, buf);
        let mean: f64 = buf.iter().zip(&self.weights).map(|(k, w)| k * w).sum();
        forward_solve(&self.chol, buf);
        let explained: f64 = buf.iter().map(|v| v * v).sum();
        let var = (prior - explained).max(0.0);
        (self.y_offset + self.y_scale * mean, var * self.y_scale * self.y_scale)
    }

    /// Upper confidence bound `mean + sqrt_beta * sd`.
    pub fn ucb(&self, z: &[f64], sqrt_beta: f64) -> f64 {
        let (m, v) = self.mean_var(z);
        m + sqrt_beta * v.sqrt()
    }

    pub fn ucb_with(&self, z: &[f64], sqrt_beta: f64, buf: &mut [f64]) -> f64 {
        let (m, v) = self.mean_var_with(z, buf);
        m + sqrt_beta * v.sqrt()
    }
}

/// `ucb = mean + sqrt_beta * sqrt(variance)`.
pub fn ucb(post: &GpPosterior, z: &[f64], sqrt_beta: f64) -> f64 {
    post.ucb(z, sqrt_beta)
}

/// Log marginal likelihood of raw targets, and its gradient with respect to
/// `(log lengthscales, log signal variance, log noise variance)`.
pub fn log_marginal_likelihood_with_grad(set: &TrainingSet, hyper: &GpHyperparams) -> Result<(f64, Vec<f64>)> {
    hyper.validate()?;
    let n = set.len();
    let d = set.dim();
    if n == 0 {
        return Ok((0.0, vec![0.0; hyper.dim() + 2]));
    }
    let k = gram(set, hyper);
    let (l, _) = cholesky_with_jitter(&k, hyper.signal_variance)?;
    let y = DVector::from_column_slice(&set.targets);
    let mut alpha = y.clone();
    l.solve_lower_triangular_mut(&mut alpha);
    let fit_term = alpha.dot(&alpha);
    l.tr_solve_lower_triangular_mut(&mut alpha);
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * fit_term - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;

    // K^{-1} from the factor
    let mut kinv = DMatrix::<f64>::identity(n, n);
    l.solve_lower_triangular_mut(&mut kinv);
    l.tr_solve_lower_triangular_mut(&mut kinv);

    let scaled = scaled_inputs(set, hyper);
    let s2 = hyper.signal_variance;
    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        for j in 0..n {
            let a = alpha[i] * alpha[j] - kinv[(i, j)];
            if i != j {
                let mut r2 = 0.0;
                for t in 0..d {
                    r2 += (scaled[i * d + t] - scaled[j * d + t]).powi(2);
                }
                let r = r2.sqrt();
                let e = (-SQRT5 * r).exp();
                let common = s2 * (5.0 / 3.0) * (1.0 + SQRT5 * r) * e;
                for t in 0..d {
                    let dt = (scaled[i * d + t] - scaled[j * d + t]).powi(2);
                    grad[t] += 0.5 * a * common * dt;
                }
                grad[d] += 0.5 * a * matern52(s2, r);
            } else {
                grad[d] += 0.5 * a * s2;
                grad[d + 1] += 0.5 * a * hyper.noise_variance;
            }
        }
    }
    Ok((lml, grad))
}

pub fn log_marginal_likelihood(set: &TrainingSet, hyper: &GpHyperparams) -> Result<f64> {
    hyper.validate()?;
    let n = set.len();
    if n == 0 {
        return Ok(0.0);
    }
    let (l, _) = cholesky_with_jitter(&gram(set, hyper), hyper.signal_variance)?;
    let mut alpha = DVector::from_column_slice(&set.targets);
    l.solve_lower_triangular_mut(&mut alpha);
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * alpha.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitDiagnostic {
    /// Fewer than two observations; defaults returned.
    TooFewPoints,
    /// Every input is the same point; defaults returned.
    DegenerateInputs,
    /// No restart produced a finite likelihood; defaults returned.
    AllRestartsFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub hyper: GpHyperparams,
    pub log_likelihood: f64,
    pub diagnostic: Option<FitDiagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iter: 60,
        }
    }
}

/// Maximum-likelihood hyperparameters over `restarts` starting points (the
/// optional warm start counts as one of them).
pub fn fit_hyperparams(
    set: &TrainingSet,
    opts: &FitOptions,
    warm_start: Option<&GpHyperparams>,
    stream: &mut SeedStream,
) -> FitOutcome {
    let dim = set.dim();
    let defaults = GpHyperparams::defaults(dim);
    let fallback = |diag| FitOutcome {
        log_likelihood: log_marginal_likelihood(set, &defaults).unwrap_or(f64::NAN),
        hyper: defaults.clone(),
        diagnostic: Some(diag),
    };
    if set.len() < 2 {
        return fallback(FitDiagnostic::TooFewPoints);
    }
    if set.all_inputs_identical() {
        return fallback(FitDiagnostic::DegenerateInputs);
    }

    let (lo, hi) = GpHyperparams::log_bounds(dim);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.restarts.max(1));
    if let Some(w) = warm_start.filter(|w| w.dim() == dim) {
        let mut t = w.to_log();
        for i in 0..t.len() {
            t[i] = t[i].clamp(lo[i], hi[i]);
        }
        starts.push(t);
    }
    starts.push(defaults.to_log());
    while starts.len() < opts.restarts.max(1) {
        let mut t: Vec<f64> = (0..dim)
            .map(|_| 0.05f64.ln() + stream.uniform() * (2.0f64.ln() - 0.05f64.ln()))
            .collect();
        t.push(0.2f64.ln() + stream.uniform() * (5.0f64.ln() - 0.2f64.ln()));
        t.push(1e-5f64.ln() + stream.uniform() * (1e-1f64.ln() - 1e-5f64.ln()));
        starts.push(t);
    }
    starts.truncate(opts.restarts.max(1));

    let lbfgs = LbfgsOptions {
        max_iter: opts.max_iter,
        pgtol: 1e-5,
        ftol: 1e-9,
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in &starts {
        let res = minimize_with_gradient(
            |theta, g| {
                let h = GpHyperparams::from_log(theta);
                match log_marginal_likelihood_with_grad(set, &h) {
                    Ok((lml, grad)) if lml.is_finite() => {
                        for (gi, v) in g.iter_mut().zip(grad) {
                            *gi = -v;
                        }
                        -lml
                    }
                    _ => {
                        g.iter_mut().for_each(|v| *v = 0.0);
                        f64::INFINITY
                    }
                }
            },
            start,
            &lo,
            &hi,
            &lbfgs,
        );
        let lml = -res.value;
        if lml.is_finite() && best.as_ref().is_none_or(|(b, _)| lml > *b) {
            best = Some((lml, res.x));
        }
    }
    match best {
        Some((lml, theta)) => FitOutcome {
            hyper: GpHyperparams::from_log(&theta),
            log_likelihood: lml,
            diagnostic: None,
        },
        None => fallback(FitDiagnostic::AllRestartsFailed),
    }
}

/// Target standardization: zero mean, unit variance of the observed values.
pub fn standardization(targets: &[f64]) -> (f64, f64) {
    let n = targets.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mean = targets.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 1.0);
    }
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

/// A fitted surrogate: standardized targets, hyperparameters and posterior.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub posterior: GpPosterior,
    pub fit: FitOutcome,
}

/// Standardize, optionally refit hyperparameters, and condition.
///
/// With `refit == false` the `warm_start` hyperparameters are reused as is.
pub fn train(
    set: &TrainingSet,
    opts: &FitOptions,
    warm_start: Option<&GpHyperparams>,
    refit: bool,
    stream: &mut SeedStream,
) -> Result<Surrogate> {
    let (offset, scale) = standardization(set.targets());
    let mut std_set = set.clone();
    for y in std_set.targets.iter_mut() {
        *y = (*y - offset) / scale;
    }
    let fit = match warm_start {
        Some(w) if !refit && w.dim() == set.dim() => FitOutcome {
            hyper: w.clone(),
            log_likelihood: f64::NAN,
            diagnostic: None,
        },
        _ => fit_hyperparams(&std_set, opts, warm_start, stream),
    };
    let posterior = GpPosterior::fit_scaled(set, &fit.hyper, offset, scale)?;
    Ok(Surrogate { posterior, fit })
}
