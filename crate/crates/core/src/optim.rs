//! Box-constrained limited-memory quasi-Newton minimization.
//!
//! Projected L-BFGS: variables sitting on a bound whose gradient pushes
//! outward are frozen for the iteration, the two-loop recursion gives a
//! direction on the rest, and an Armijo backtracking search runs along the
//! projected path. Gradients come either from the caller or from central
//! differences (one-sided against a bound).

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop when the projected gradient's infinity norm falls below this.
    pub pgtol: f64,
    /// Stop when the relative decrease of f falls below this.
    pub ftol: f64,
    /// Finite-difference step, relative to the box width.
    pub fd_step: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            memory: 8,
            pgtol: 1e-7,
            ftol: 1e-10,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &l), &u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(l, u);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference gradient of `f` at `x`; returns `f(x)`.
pub fn fd_gradient<F>(f: &mut F, x: &[f64], lower: &[f64], upper: &[f64], rel_step: f64, grad: &mut [f64]) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let fx = f(x);
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * (upper[i] - lower[i]).max(1e-12);
        let up = (x[i] + h).min(upper[i]);
        let dn = (x[i] - h).max(lower[i]);
        probe[i] = up;
        let fu = if up > x[i] { f(&probe) } else { fx };
        probe[i] = dn;
        let fd = if dn < x[i] { f(&probe) } else { fx };
        probe[i] = x[i];
        grad[i] = if up > dn { (fu - fd) / (up - dn) } else { 0.0 };
    }
    fx
}

/// Minimize `fg` (value, writes the gradient) over the box.
pub fn minimize_with_gradient<F>(
    mut fg: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &LbfgsOptions,
) -> OptimResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut converged = false;
    let mut iterations = 0;

    if !f.is_finite() {
        return OptimResult {
            x,
            value: f,
            iterations,
            evaluations,
            converged,
        };
    }

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    while iterations < opts.max_iter {
        // frozen coordinates: on a bound with the gradient pushing outward
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let pg = (0..n)
            .map(|i| if free[i] { g[i].abs() } else { 0.0 })
            .fold(0.0, f64::max);
        if pg <= opts.pgtol {
            converged = true;
            break;
        }

        // two-loop recursion on the free subspace
        let mut d: Vec<f64> = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for i in 0..n {
                d[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (a - b) * s[i];
            }
        }
        for i in 0..n {
            if !free[i] {
                d[i] = 0.0;
            }
        }
        if dot(&d, &g) >= 0.0 {
            history.clear();
            d = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        }

        let mut step = if history.is_empty() {
            let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let width = lower
                .iter()
                .zip(upper)
                .map(|(l, u)| u - l)
                .fold(f64::INFINITY, f64::min);
            (0.1 * width / dn).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..30 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            project(&mut x_new, lower, upper);
            let decrease: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            f_new = fg(&x_new, &mut g_new);
            evaluations += 1;
            if f_new.is_finite() && f_new <= f + 1e-4 * decrease {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // no descent along the projected direction
            converged = history.is_empty();
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        }

        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(1e-300) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let rel = (f - f_new).abs() / f.abs().max(f_new.abs()).max(1.0);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        if rel <= opts.ftol {
            converged = true;
            break;
        }
    }

    OptimResult {
        x,
        value: f,
        iterations,
        evaluations,
        converged,
    }
}

/// Minimize `f` using central-difference gradients.
pub fn minimize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &LbfgsOptions) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut extra = 0usize;
    let step = opts.fd_step;
    let mut res = minimize_with_gradient(
        |x, g| {
            extra += 2 * n;
            fd_gradient(&mut f, x, lower, upper, step, g)
        },
        x0,
        lower,
        upper,
        opts,
    );
    res.evaluations += extra;
    res
}

/// Maximize `f` using central-difference gradients.
pub fn maximize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &LbfgsOptions) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut res = minimize(|x| -f(x), x0, lower, upper, opts);
    res.value = -res.value;
    res
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_interior_minimum() {
        let res = minimize_with_gradient(
            |x, g| {
                g[0] = 2.0 * (x[0] - 0.3);
                g[1] = 20.0 * (x[1] + 0.2);
                (x[0] - 0.3).powi(2) + 10.0 * (x[1] + 0.2).powi(2)
            },
            &[0.9, 0.9],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &LbfgsOptions::default(),
        );
        assert!(res.converged);
        assert!(
            (res.x[0] - 0.3).abs() < 1e-6 && (res.x[1] + 0.2).abs() < 1e-6,
            "{:?}",
            res.x
        );
    }

    #[test]
    fn active_bound() {
        // unconstrained minimum at (2, -3); box clips it to (1, -1)
        let res = minimize(
            |x| (x[0] - 2.0).powi(2) + (x[1] + 3.0).powi(2) + x[0] * x[1] * 0.1,
            &[0.0, 0.0],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &LbfgsOptions::default(),
        );
        assert!(
            (res.x[0] - 1.0).abs() < 1e-9 && (res.x[1] + 1.0).abs() < 1e-9,
            "{:?}",
            res.x
        );
    }

    #[test]
    fn rosenbrock() {
        let res = minimize_with_gradient(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            &[-1.2, 1.0],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            &LbfgsOptions {
                max_iter: 500,
                ..Default::default()
            },
        );
        assert!(
            (res.x[0] - 1.0).abs() < 1e-4 && (res.x[1] - 1.0).abs() < 1e-4,
            "{res:?}"
        );
    }

    #[test]
    fn maximize_stays_in_box() {
        let res = maximize(
            |x| x[0] + x[1],
            &[0.2, 0.4],
            &[0.0, 0.0],
            &[1.0, 0.5],
            &LbfgsOptions::default(),
        );
        assert_eq!(res.x, vec![1.0, 0.5]);
        assert!((res.value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fd_gradient_matches_analytic() {
        let mut f = |x: &[f64]| x[0].sin() * x[1].exp();
        let mut g = [0.0; 2];
        fd_gradient(&mut f, &[0.4, 0.2], &[0.0, 0.0], &[1.0, 1.0], 1e-6, &mut g);
        assert!((g[0] - 0.4f64.cos() * 0.2f64.exp()).abs() < 1e-8);
        assert!((g[1] - 0.4f64.sin() * 0.2f64.exp()).abs() < 1e-8);
        // one-sided at the bound
        fd_gradient(&mut f, &[1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0], 1e-6, &mut g);
        assert!((g[0] - 1f64.cos()).abs() < 1e-5);
    }
}
