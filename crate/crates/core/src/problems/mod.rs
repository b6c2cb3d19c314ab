//! Benchmark problems: objectives, context distributions and noisy
//! evaluation.

mod distribution;
pub mod functions;

use std::fmt;
use std::sync::Arc;

pub use distribution::{complicated_mixture, Component, ContextDistribution, ContextLaw};
use functions::GpSampleFn;

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Names accepted by [`Problem::by_name`].
pub const PROBLEM_NAMES: &[&str] = &[
    "ackley",
    "ackley-c4",
    "modified-branin",
    "hartmann",
    "hartmann-complicated",
    "newsvendor",
    "gp-sample",
];

type ObjectiveFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Problem {
    name: String,
    x_lower: Vec<f64>,
    x_upper: Vec<f64>,
    context: ContextDistribution,
    objective: Arc<ObjectiveFn>,
    noise_sigma: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dx", &self.dx())
            .field("dc", &self.dc())
            .field("noise_sigma", &self.noise_sigma)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(
        name: impl Into<String>,
        x_lower: Vec<f64>,
        x_upper: Vec<f64>,
        context: ContextDistribution,
        objective: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        if x_lower.is_empty() || x_lower.len() != x_upper.len() {
            return Err(Error::Precondition("decision box dimensions disagree".into()));
        }
        if x_lower.iter().zip(&x_upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Precondition("decision box must have lower < upper".into()));
        }
        Ok(Self {
            name: name.into(),
            x_lower,
            x_upper,
            context,
            objective: Arc::new(objective),
            noise_sigma: 0.0,
        })
    }

    /// Problem on `[0, 1]^dx` with the given context distribution.
    pub fn unit<F>(name: impl Into<String>, dx: usize, context: ContextDistribution, objective: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, vec![0.0; dx], vec![1.0; dx], context, objective)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let p = match name {
            "ackley" => Self::unit(
                name,
                2,
                ContextDistribution::iid_normal(0.5, 0.15, 1)?,
                functions::ackley,
            )?,
            "ackley-c4" => Self::unit(
                name,
                2,
                ContextDistribution::iid_normal(0.5, 0.15, 4)?,
                functions::ackley,
            )?,
            "modified-branin" => Self::unit(
                name,
                2,
                ContextDistribution::iid_normal(0.5, 0.1, 2)?,
                functions::modified_branin,
            )?,
            "hartmann" => Self::unit(
                name,
                5,
                ContextDistribution::iid_normal(0.5, 0.1, 1)?,
                functions::hartmann,
            )?,
            "hartmann-complicated" => Self::unit(
                name,
                5,
                ContextDistribution::unit(complicated_mixture(), 1)?,
                functions::hartmann,
            )?,
            "newsvendor" => Self::unit(
                name,
                1,
                ContextDistribution::unit(ContextLaw::BurrXII { alpha: 2.0, beta: 20.0 }, 1)?,
                functions::newsvendor,
            )?,
            "gp-sample" => {
                let f = GpSampleFn::new(2, 0.2, 256, 0);
                Self::unit(name, 1, ContextDistribution::iid_normal(0.5, 0.15, 1)?, move |x, c| {
                    f.eval(&[x[0], c[0]])
                })?
            }
            _ => {
                return Err(Error::UnknownName {
                    kind: "problem",
                    name: name.to_string(),
                })
            }
        };
        Ok(p)
    }

    pub fn with_noise(mut self, noise_sigma: f64) -> Self {
        assert!(noise_sigma >= 0.0, "noise_sigma must be non-negative");
        self.noise_sigma = noise_sigma;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dx(&self) -> usize {
        self.x_lower.len()
    }

    pub fn dc(&self) -> usize {
        self.context.dim()
    }

    pub fn x_lower(&self) -> &[f64] {
        &self.x_lower
    }

    pub fn x_upper(&self) -> &[f64] {
        &self.x_upper
    }

    pub fn context(&self) -> &ContextDistribution {
        &self.context
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    fn check_box(&self, x: &[f64], c: &[f64]) -> Result<()> {
        const TOL: f64 = 1e-12;
        if x.len() != self.dx() || c.len() != self.dc() {
            return Err(Error::Domain(format!(
                "expected {}+{} coordinates, got {}+{}",
                self.dx(),
                self.dc(),
                x.len(),
                c.len()
            )));
        }
        let outside = |v: &[f64], lo: &[f64], hi: &[f64]| {
            v.iter()
                .zip(lo.iter().zip(hi))
                .any(|(&v, (&l, &h))| !(v >= l - TOL && v <= h + TOL))
        };
        if outside(x, &self.x_lower, &self.x_upper) {
            return Err(Error::Domain(format!("decision {x:?} outside the box")));
        }
        if outside(c, self.context.lower(), self.context.upper()) {
            return Err(Error::Domain(format!("context {c:?} outside the box")));
        }
        Ok(())
    }

    /// Noise-free objective value.
    pub fn eval(&self, x: &[f64], c: &[f64]) -> Result<f64> {
        self.check_box(x, c)?;
        Ok((self.objective)(x, c))
    }

    /// Objective value without the box check.
    pub(crate) fn eval_raw(&self, x: &[f64], c: &[f64]) -> f64 {
        (self.objective)(x, c)
    }

    /// Objective value plus Gaussian observation noise.
    pub fn observe(&self, x: &[f64], c: &[f64], stream: &mut SeedStream) -> Result<f64> {
        let f = self.eval(x, c)?;
        if self.noise_sigma == 0.0 {
            return Ok(f);
        }
        Ok(f + self.noise_sigma * stream.standard_normal())
    }

    pub fn sample_context(&self, stream: &mut SeedStream) -> Vec<f64> {
        self.context.sample(stream)
    }
}
