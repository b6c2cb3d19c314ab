//! Benchmark objectives on the unit joint box. All are maximized.

use std::f64::consts::{E, PI};

use crate::rng::SeedStream;

/// Ackley with the decision and context coordinates pooled. The leading
/// exponential enters with a positive sign, so the peak value 40 sits at
/// the centre of the box.
pub fn ackley(x: &[f64], c: &[f64]) -> f64 {
    const A: f64 = 20.0;
    const B: f64 = 0.2;
    const H: f64 = 2.0 * PI;
    let d = (x.len() + c.len()) as f64;
    let (mut sq, mut cs) = (0.0, 0.0);
    for &v in x.iter().chain(c) {
        let s = 65.536 * v - 32.768;
        sq += s * s;
        cs += (H * s).cos();
    }
    A * (-B * (sq / d).sqrt()).exp() - (cs / d).exp() + A + E
}

fn branin(u: f64, v: f64) -> f64 {
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    a * (v - b * u * u + c * u - r).powi(2) + s * (1.0 - t) * u.cos() + s
}

pub fn modified_branin(x: &[f64], c: &[f64]) -> f64 {
    let h1 = branin(15.0 * x[0] - 5.0, 15.0 * c[0]);
    let h2 = branin(15.0 * c[1] - 5.0, 15.0 * x[1]);
    -(h1 * h2).sqrt()
}

/// Weights as printed with the benchmark definition. The textbook Hartmann
/// uses 1.2 for the second weight.
pub const HARTMANN_ALPHA: [f64; 4] = [1.0, 2.0, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Six-dimensional Hartmann; the context is the last coordinate.
pub fn hartmann(x: &[f64], c: &[f64]) -> f64 {
    hartmann_with_weights(&HARTMANN_ALPHA, x, c)
}

pub fn hartmann_with_weights(alpha: &[f64; 4], x: &[f64], c: &[f64]) -> f64 {
    let y = [x[0], x[1], x[2], x[3], x[4], c[0]];
    alpha
        .iter()
        .zip(HARTMANN_A.iter().zip(&HARTMANN_P))
        .map(|(alpha, (a, p))| {
            let inner: f64 = (0..6).map(|j| a[j] * (y[j] - p[j]).powi(2)).sum();
            alpha * (-inner).exp()
        })
        .sum()
}

/// Vendor profit: unit sale price 9, salvage value 1, unit cost 5.
pub fn newsvendor(x: &[f64], c: &[f64]) -> f64 {
    let (order, demand) = (x[0], c[0]);
    9.0 * order.min(demand) + (order - demand).max(0.0) - 5.0 * order
}

/// A fixed draw from a zero-mean GP with a squared-exponential kernel,
/// represented by random Fourier features.
#[derive(Debug, Clone)]
pub struct GpSampleFn {
    freqs: Vec<Vec<f64>>,
    phases: Vec<f64>,
    amps: Vec<f64>,
}

impl GpSampleFn {
    pub fn new(dim: usize, lengthscale: f64, features: usize, seed: u64) -> Self {
        let mut s = SeedStream::new(seed).derive("gp-sample", 0);
        let freqs = (0..features)
            .map(|_| (0..dim).map(|_| s.standard_normal() / lengthscale).collect())
            .collect();
        let phases = (0..features).map(|_| 2.0 * PI * s.uniform()).collect();
        let scale = (2.0 / features as f64).sqrt();
        let amps = (0..features).map(|_| scale * s.standard_normal()).collect();
        Self { freqs, phases, amps }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.freqs
            .iter()
            .zip(self.phases.iter().zip(&self.amps))
            .map(|(w, (b, a))| {
                let arg: f64 = w.iter().zip(z).map(|(wi, zi)| wi * zi).sum::<f64>() + b;
                a * arg.cos()
            })
            .sum()
    }
}
