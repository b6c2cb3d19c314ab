use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmc::{normal_pdf, standard_normal_quantile};
use crate::rng::SeedStream;

/// One component of a scalar mixture law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Component {
    Normal { mu: f64, sigma: f64 },
    Cauchy { loc: f64, scale: f64 },
}

impl Component {
    fn pdf(&self, c: f64) -> f64 {
        match *self {
            Component::Normal { mu, sigma } => normal_pdf((c - mu) / sigma) / sigma,
            Component::Cauchy { loc, scale } => {
                let z = (c - loc) / scale;
                1.0 / (std::f64::consts::PI * scale * (1.0 + z * z))
            }
        }
    }

    fn sample(&self, stream: &mut SeedStream) -> f64 {
        match *self {
            Component::Normal { mu, sigma } => mu + sigma * stream.standard_normal(),
            Component::Cauchy { loc, scale } => {
                let u = stream.uniform();
                loc + scale * (std::f64::consts::PI * (u - 0.5)).tan()
            }
        }
    }
}

/// The law of the context before clipping. Scalar laws (`BurrXII`,
/// `Mixture`) apply independently to every context dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContextLaw {
    ClippedNormal {
        mu: Vec<f64>,
        sigma: Vec<f64>,
    },
    Uniform,
    BurrXII {
        alpha: f64,
        beta: f64,
    },
    Mixture {
        components: Vec<Component>,
        weights: Vec<f64>,
    },
}

/// A context law together with the box its draws are clipped to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDistribution {
    law: ContextLaw,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ContextDistribution {
    pub fn new(law: ContextLaw, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Precondition("context box dimensions disagree".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Precondition("context box must have lower < upper".into()));
        }
        let dim = lower.len();
        match &law {
            ContextLaw::ClippedNormal { mu, sigma } => {
                if mu.len() != dim || sigma.len() != dim {
                    return Err(Error::Precondition("normal parameters must match D_c".into()));
                }
                if sigma.iter().any(|&s| !(s > 0.0)) {
                    return Err(Error::Precondition("normal sigma must be positive".into()));
                }
            }
            ContextLaw::Uniform => {}
            ContextLaw::BurrXII { alpha, beta } => {
                if !(*alpha > 0.0 && *beta > 0.0) {
                    return Err(Error::Precondition("Burr XII parameters must be positive".into()));
                }
            }
            ContextLaw::Mixture { components, weights } => {
                if components.is_empty() || components.len() != weights.len() {
                    return Err(Error::Precondition("mixture weights must match components".into()));
                }
                if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::Precondition("mixture weights must sum to 1".into()));
                }
                let bad = components.iter().any(|c| match *c {
                    Component::Normal { sigma, .. } => !(sigma > 0.0),
                    Component::Cauchy { scale, .. } => !(scale > 0.0),
                });
                if bad {
                    return Err(Error::Precondition("mixture scales must be positive".into()));
                }
            }
        }
        Ok(Self { law, lower, upper })
    }

    /// Same law in every one of `dim` dimensions, box `[0, 1]^dim`.
    pub fn unit(law: ContextLaw, dim: usize) -> Result<Self> {
        Self::new(law, vec![0.0; dim], vec![1.0; dim])
    }

    pub fn iid_normal(mu: f64, sigma: f64, dim: usize) -> Result<Self> {
        Self::unit(
            ContextLaw::ClippedNormal {
                mu: vec![mu; dim],
                sigma: vec![sigma; dim],
            },
            dim,
        )
    }

    pub fn law(&self) -> &ContextLaw {
        &self.law
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn has_quantile(&self) -> bool {
        !matches!(self.law, ContextLaw::Mixture { .. })
    }

    fn clip(&self, d: usize, v: f64) -> f64 {
        v.clamp(self.lower[d], self.upper[d])
    }

    /// Draw from the un-clipped law, then clip to the box.
    pub fn sample(&self, stream: &mut SeedStream) -> Vec<f64> {
        (0..self.dim())
            .map(|d| {
                let raw = match &self.law {
                    ContextLaw::ClippedNormal { mu, sigma } => mu[d] + sigma[d] * stream.standard_normal(),
                    ContextLaw::Uniform => self.lower[d] + stream.uniform() * (self.upper[d] - self.lower[d]),
                    ContextLaw::BurrXII { alpha, beta } => {
                        // 1 - U is in (0, 1], keeping the quantile finite.
                        burr_quantile(1.0 - stream.uniform(), *alpha, *beta, true)
                    }
                    ContextLaw::Mixture { components, weights } => {
                        let u = stream.uniform();
                        let mut acc = 0.0;
                        let mut pick = components.len() - 1;
                        for (i, w) in weights.iter().enumerate() {
                            acc += w;
                            if u < acc {
                                pick = i;
                                break;
                            }
                        }
                        components[pick].sample(stream)
                    }
                };
                self.clip(d, raw)
            })
            .collect()
    }

    /// Per-dimension quantile of the un-clipped law, `u` in `(0, 1)^D_c`.
    pub fn quantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::Precondition("quantile level has wrong dimension".into()));
        }
        if let Some(bad) = u.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Domain(format!("quantile level {bad} not in (0, 1)")));
        }
        self.quantile_unchecked(u)
    }

    fn quantile_unchecked(&self, u: &[f64]) -> Result<Vec<f64>> {
        u.iter()
            .enumerate()
            .map(|(d, &p)| match &self.law {
                ContextLaw::ClippedNormal { mu, sigma } => Ok(if p <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    mu[d] + sigma[d] * standard_normal_quantile(p)
                }),
                ContextLaw::Uniform => Ok(self.lower[d] + p * (self.upper[d] - self.lower[d])),
                ContextLaw::BurrXII { alpha, beta } => Ok(burr_quantile(p, *alpha, *beta, false)),
                ContextLaw::Mixture { .. } => Err(Error::Unsupported(
                    "normal/Cauchy mixture has no closed-form quantile".into(),
                )),
            })
            .collect()
    }

    /// Quantile transform of a point of `[0, 1)^D_c` followed by clipping;
    /// `u = 0` maps onto the lower clip boundary.
    pub fn clipped_quantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::Precondition("quantile level has wrong dimension".into()));
        }
        let raw = self.quantile_unchecked(u)?;
        Ok(raw.into_iter().enumerate().map(|(d, v)| self.clip(d, v)).collect())
    }

    /// Density of the un-clipped law. The boundary atoms created by clipping
    /// are not represented.
    pub fn pdf(&self, c: &[f64]) -> f64 {
        c.iter()
            .enumerate()
            .map(|(d, &v)| match &self.law {
                ContextLaw::ClippedNormal { mu, sigma } => normal_pdf((v - mu[d]) / sigma[d]) / sigma[d],
                ContextLaw::Uniform => {
                    if v >= self.lower[d] && v <= self.upper[d] {
                        1.0 / (self.upper[d] - self.lower[d])
                    } else {
                        0.0
                    }
                }
                ContextLaw::BurrXII { alpha, beta } => {
                    if v <= 0.0 {
                        // c^(alpha-1) at 0 is 0 for alpha > 1
                        if v == 0.0 && *alpha == 1.0 {
                            alpha * beta
                        } else if v == 0.0 && *alpha < 1.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        }
                    } else {
                        alpha * beta * v.powf(alpha - 1.0) / (1.0 + v.powf(*alpha)).powf(beta + 1.0)
                    }
                }
                ContextLaw::Mixture { components, weights } => {
                    components.iter().zip(weights).map(|(c, w)| w * c.pdf(v)).sum()
                }
            })
            .product()
    }
}

/// Burr XII quantile. With `upper_tail`, `p` is the survival probability.
fn burr_quantile(p: f64, alpha: f64, beta: f64, upper_tail: bool) -> f64 {
    let survival = if upper_tail { p } else { 1.0 - p };
    if survival <= 0.0 {
        return f64::INFINITY;
    }
    (survival.powf(-1.0 / beta) - 1.0).max(0.0).powf(1.0 / alpha)
}

/// The eight-component normal/Cauchy mixture with equal weights.
pub fn complicated_mixture() -> ContextLaw {
    let components = vec![
        Component::Normal { mu: 0.1, sigma: 0.02 },
        Component::Normal { mu: 0.3, sigma: 0.075 },
        Component::Normal { mu: 0.4, sigma: 0.1 },
        Component::Normal { mu: 0.5, sigma: 0.1 },
        Component::Normal { mu: 0.7, sigma: 0.075 },
        Component::Normal { mu: 0.8, sigma: 0.03 },
        Component::Cauchy { loc: 0.2, scale: 0.02 },
        Component::Cauchy { loc: 0.8, scale: 0.02 },
    ];
    let weights = vec![1.0 / 8.0; 8];
    ContextLaw::Mixture { components, weights }
}
