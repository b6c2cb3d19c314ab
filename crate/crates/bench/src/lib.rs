//! Shared fixtures for the criterion benches.

use ctxbo::gp::{GpHyperparams, GpPosterior, TrainingSet};
use ctxbo::kde::KdeModel;
use ctxbo::problems::functions::ackley;
use ctxbo::sobol::sobol_in_box;
use ctxbo::SeedStream;

/// Posterior over the joint (x, c) space of Ackley with `n` Sobol points.
pub fn ackley_posterior(n: usize) -> GpPosterior {
    let rows = sobol_in_box(&[0.0; 3], &[1.0; 3], n).unwrap();
    let y: Vec<f64> = rows.iter().map(|r| ackley(&r[..2], &r[2..])).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let hyper = GpHyperparams {
        lengthscales: vec![0.2; 3],
        signal_variance: 1.0,
        noise_variance: 1e-4,
    };
    let set = TrainingSet::from_rows(&rows, &y).unwrap();
    GpPosterior::fit_scaled(&set, &hyper, mean, 10.0).unwrap()
}

/// Density estimate from `n` clipped normal contexts.
pub fn context_kde(n: usize) -> KdeModel {
    let mut s = SeedStream::new(11);
    let samples = (0..n)
        .map(|_| vec![(0.5 + 0.15 * s.standard_normal()).clamp(0.0, 1.0)])
        .collect();
    KdeModel::fit(samples, &[0.0], &[1.0]).unwrap()
}
