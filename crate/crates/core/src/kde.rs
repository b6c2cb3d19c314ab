//! Gaussian kernel density estimate of the context distribution with a
//! diagonal rule-of-thumb bandwidth.

use crate::error::{Error, Result};
use crate::rng::SeedStream;

pub const MIN_BANDWIDTH: f64 = 1e-3;

/// Diagonal of the bandwidth matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Bandwidth(Vec<f64>);

impl Bandwidth {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() || h.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Precondition("bandwidth entries must be positive".into()));
        }
        Ok(Self(h))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// Rule-of-thumb bandwidth for `t` samples with per-dimension spread `sigma`.
pub fn bandwidth_from_sigma(sigma: &[f64], t: usize) -> Result<Bandwidth> {
    if t == 0 {
        return Err(Error::Precondition("bandwidth needs at least one sample".into()));
    }
    let d = sigma.len() as f64;
    let factor = (4.0 / (d + 2.0)).powf(1.0 / (4.0 + d)) * (t as f64).powf(-1.0 / (4.0 + d));
    Bandwidth::new(
        sigma
            .iter()
            .map(|&s| if s > 0.0 { factor * s } else { MIN_BANDWIDTH })
            .collect(),
    )
}

/// Per-dimension sample standard deviation (divisor `t - 1`; zero for one sample).
fn sample_sd(samples: &[Vec<f64>]) -> Vec<f64> {
    let t = samples.len();
    let d = samples[0].len();
    (0..d)
        .map(|j| {
            if t < 2 {
                return 0.0;
            }
            // shifted by the first sample so identical samples give exactly zero
            let shift = samples[0][j];
            let mean = samples.iter().map(|s| s[j] - shift).sum::<f64>() / t as f64;
            let ss = samples.iter().map(|s| (s[j] - shift - mean).powi(2)).sum::<f64>();
            (ss / (t - 1) as f64).sqrt()
        })
        .collect()
}

pub fn rule_of_thumb_bandwidth(samples: &[Vec<f64>]) -> Result<Bandwidth> {
    if samples.is_empty() {
        return Err(Error::Precondition("bandwidth needs at least one sample".into()));
    }
    bandwidth_from_sigma(&sample_sd(samples), samples.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    samples: Vec<Vec<f64>>,
    bandwidth: Bandwidth,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl KdeModel {
    /// Model with the rule-of-thumb bandwidth.
    pub fn fit(samples: Vec<Vec<f64>>, lower: &[f64], upper: &[f64]) -> Result<Self> {
        let bandwidth = rule_of_thumb_bandwidth(&samples)?;
        Self::with_bandwidth(samples, bandwidth, lower, upper)
    }

    pub fn with_bandwidth(samples: Vec<Vec<f64>>, bandwidth: Bandwidth, lower: &[f64], upper: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Precondition("density estimate needs at least one sample".into()));
        }
        let d = bandwidth.as_slice().len();
        if samples.iter().any(|s| s.len() != d) || lower.len() != d || upper.len() != d {
            return Err(Error::Precondition(
                "sample, bandwidth and box dimensions disagree".into(),
            ));
        }
        Ok(Self {
            samples,
            bandwidth,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.bandwidth.as_slice().len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn bandwidth(&self) -> &Bandwidth {
        &self.bandwidth
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Unclipped density estimate at `c`.
    pub fn density(&self, c: &[f64]) -> f64 {
        let h = self.bandwidth.as_slice();
        let d = h.len() as f64;
        let det: f64 = h.iter().product();
        let norm = (2.0 * std::f64::consts::PI).powf(-d / 2.0) / (self.samples.len() as f64 * det);
        let sum: f64 = self
            .samples
            .iter()
            .map(|s| {
                let q: f64 = s
                    .iter()
                    .zip(c)
                    .zip(h)
                    .map(|((si, ci), hi)| ((ci - si) / hi).powi(2))
                    .sum();
                (-0.5 * q).exp()
            })
            .sum();
        norm * sum
    }

    /// One draw: a uniformly chosen atom plus bandwidth-scaled Gaussian
    /// noise, clipped to the box.
    pub fn sample_one(&self, stream: &mut SeedStream) -> Vec<f64> {
        let atom = &self.samples[stream.below(self.samples.len())];
        atom.iter()
            .zip(self.bandwidth.as_slice())
            .zip(self.lower.iter().zip(&self.upper))
            .map(|((a, h), (lo, hi))| (a + h * stream.standard_normal()).clamp(*lo, *hi))
            .collect()
    }

    pub fn sample(&self, m: usize, stream: &mut SeedStream) -> Vec<Vec<f64>> {
        (0..m).map(|_| self.sample_one(stream)).collect()
    }
}

pub fn density(model: &KdeModel, c: &[f64]) -> f64 {
    model.density(c)
}

pub fn sample_kde(model: &KdeModel, m: usize, stream: &mut SeedStream) -> Vec<Vec<f64>> {
    model.sample(m, stream)
}
