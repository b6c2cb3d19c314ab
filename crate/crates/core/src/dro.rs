//! Worst-case expectation over a total-variation ball.
//!
//! For a discrete nominal distribution `w` over values `u` and radius
//! `delta`, the adversary may move up to `delta / 2` of the mass anywhere in
//! the context space; the cheapest destination is the infimum `u_inf`.
//! [`worst_case_value`] performs that transport directly and
//! [`solve_dual`] solves the two-variable dual exactly.

use crate::error::{Error, Result};
use crate::gp::GpPosterior;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustInstance {
    u: Vec<f64>,
    weights: Vec<f64>,
    u_inf: f64,
    delta: f64,
}

impl RobustInstance {
    /// Uniform weights.
    pub fn uniform(u: Vec<f64>, u_inf: f64, delta: f64) -> Result<Self> {
        let m = u.len();
        if m == 0 {
            return Err(Error::Precondition("robust instance needs at least one value".into()));
        }
        Self::new(u, vec![1.0 / m as f64; m], u_inf, delta)
    }

    pub fn new(u: Vec<f64>, weights: Vec<f64>, u_inf: f64, delta: f64) -> Result<Self> {
        if u.is_empty() || u.len() != weights.len() {
            return Err(Error::Precondition(
                "values and weights must be non-empty and equal in length".into(),
            ));
        }
        if u.iter().any(|v| !v.is_finite()) || !u_inf.is_finite() {
            return Err(Error::Precondition("values must be finite".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition("weights must be a probability vector".into()));
        }
        if !(delta >= 0.0) {
            return Err(Error::Precondition("radius must be non-negative".into()));
        }
        let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
        if u_inf > min_u + 1e-9 {
            return Err(Error::Precondition(format!(
                "u_inf {u_inf} exceeds the smallest value {min_u}"
            )));
        }
        Ok(Self {
            u,
            weights,
            u_inf,
            delta,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn u_inf(&self) -> f64 {
        self.u_inf
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nominal_mean(&self) -> f64 {
        self.u.iter().zip(&self.weights).map(|(u, w)| u * w).sum()
    }

    /// Indices ordered by value, ties by index.
    fn ascending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.u.len()).collect();
        idx.sort_by(|&a, &b| self.u[a].total_cmp(&self.u[b]).then(a.cmp(&b)));
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustDualSolution {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

/// Primal worst case: move `min(delta/2, 1)` of the mass off the largest
/// values onto `u_inf`.
pub fn worst_case_value(inst: &RobustInstance) -> f64 {
    let mut budget = (inst.delta / 2.0).min(1.0);
    let moved = budget;
    let mut value = 0.0;
    for &i in inst.ascending().iter().rev() {
        let take = inst.weights[i].min(budget);
        budget -= take;
        value += (inst.weights[i] - take) * inst.u[i];
    }
    value + moved * inst.u_inf
}

/// Dual value `sum_i w_i (-beta - delta alpha + min(u_i + beta, alpha))`.
pub fn dual_objective(inst: &RobustInstance, alpha: f64, beta: f64) -> f64 {
    inst.u
        .iter()
        .zip(&inst.weights)
        .map(|(u, w)| w * (-beta - inst.delta * alpha + (u + beta).min(alpha)))
        .sum()
}

/// Exact dual maximizer.
///
/// With `tau = alpha - beta` and the smallest feasible `alpha`, the objective
/// becomes the concave piecewise-linear
/// `g(tau) = sum_i w_i min(u_i, tau) - (delta / 2)(tau - u_inf)` on
/// `tau >= u_inf`, whose slope is the mass above `tau` minus `delta / 2`.
/// The maximizer is the first breakpoint where that slope turns non-positive.
pub fn solve_dual(inst: &RobustInstance) -> RobustDualSolution {
    let half = inst.delta / 2.0;
    let order = inst.ascending();
    let mut above: f64 = 1.0;
    let mut tau = inst.u_inf;
    if above > half {
        for &i in &order {
            tau = inst.u[i].max(inst.u_inf);
            above -= inst.weights[i];
            if above <= half + 1e-15 {
                break;
            }
        }
    }
    let below: f64 = inst.u.iter().zip(&inst.weights).map(|(u, w)| w * u.min(tau)).sum();
    let value = below - half * (tau - inst.u_inf);
    let alpha = (tau - inst.u_inf) / 2.0;
    RobustDualSolution {
        alpha,
        beta: alpha - tau,
        value,
    }
}

/// Smallest UCB over a fixed set of context points for decision `x`.
pub fn inf_ucb_over_context(post: &GpPosterior, x: &[f64], sqrt_beta: f64, grid: &[Vec<f64>]) -> f64 {
    let mut z = x.to_vec();
    let mut buf = vec![0.0; post.len()];
    grid.iter()
        .map(|c| {
            z.truncate(x.len());
            z.extend_from_slice(c);
            post.ucb_with(&z, sqrt_beta, &mut buf)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpHyperparams;
    use crate::sobol::sobol_in_box;

    #[test]
    fn primal_examples() {
        let u = vec![0.0, 1.0, 2.0, 3.0];
        let mean = RobustInstance::uniform(u.clone(), 0.0, 0.0).unwrap();
        assert_eq!(worst_case_value(&mean), 1.5);
        let full = RobustInstance::uniform(u.clone(), -2.0, 2.5).unwrap();
        assert_eq!(worst_case_value(&full), -2.0);
        let half = RobustInstance::uniform(u, 0.0, 1.0).unwrap();
        assert!((worst_case_value(&half) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dual_examples() {
        for delta in [0.0, 0.3, 1.0, 5.0] {
            let inst = RobustInstance::uniform(vec![0.7; 5], 0.7, delta).unwrap();
            assert!((solve_dual(&inst).value - 0.7).abs() < 1e-12);
        }
        let inst = RobustInstance::uniform(vec![0.0, 1.0], 0.0, 0.5).unwrap();
        assert!((solve_dual(&inst).value - 0.25).abs() < 1e-12);
        for (u, u_inf, delta) in [
            (vec![0.0, 1.0, 2.0, 3.0], 0.0, 0.0),
            (vec![0.0, 1.0, 2.0, 3.0], -2.0, 2.5),
            (vec![0.0, 1.0, 2.0, 3.0], 0.0, 1.0),
        ] {
            let inst = RobustInstance::uniform(u, u_inf, delta).unwrap();
            let sol = solve_dual(&inst);
            assert!((sol.value - worst_case_value(&inst)).abs() < 1e-8);
            assert!((sol.value - dual_objective(&inst, sol.alpha, sol.beta)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(RobustInstance::uniform(vec![], 0.0, 1.0).is_err());
        assert!(RobustInstance::uniform(vec![1.0], 2.0, 1.0).is_err());
        assert!(RobustInstance::uniform(vec![1.0], 0.0, -1.0).is_err());
        assert!(RobustInstance::new(vec![1.0, 2.0], vec![0.5, 0.6], 0.0, 1.0).is_err());
    }

    #[test]
    fn prior_inf_ucb_is_constant() {
        let post = GpPosterior::prior(&GpHyperparams::defaults(2));
        let grid = sobol_in_box(&[0.0], &[1.0], 64).unwrap();
        assert_eq!(inf_ucb_over_context(&post, &[0.3], 1.5, &grid), 1.5);
        let single = sobol_in_box(&[0.0], &[1.0], 1).unwrap();
        let z = [0.3, single[0][0]];
        assert_eq!(inf_ucb_over_context(&post, &[0.3], 1.5, &single), post.ucb(&z, 1.5));
    }
}
