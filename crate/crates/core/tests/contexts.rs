use ctxbo::problems::{complicated_mixture, ContextDistribution, ContextLaw};
use ctxbo::qmc::{normal_cdf, qmc_context_samples};
use ctxbo::sobol::{sobol_points, MAX_DIM};
use ctxbo::SeedStream;
use proptest::prelude::*;

/// Largest gap between the empirical CDF and `cdf`, over draws strictly
/// inside `(0, 1)` so clipping atoms are ignored.
fn ks_interior(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0 && x < 1.0)
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn draws(dist: &ContextDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut s = SeedStream::new(seed);
    (0..n).map(|_| dist.sample(&mut s)[0]).collect()
}

#[test]
fn burr_draws_follow_the_cdf() {
    let dist = ContextDistribution::unit(ContextLaw::BurrXII { alpha: 2.0, beta: 20.0 }, 1).unwrap();
    let ks = ks_interior(draws(&dist, 5000, 3), |x| 1.0 - (1.0 + x * x).powf(-20.0));
    assert!(ks < 1.63 / 5000f64.sqrt(), "{ks}");
}

#[test]
fn mixture_draws_follow_the_cdf() {
    let dist = ContextDistribution::unit(complicated_mixture(), 1).unwrap();
    let cdf = |x: f64| {
        let normals = [
            (0.1, 0.02),
            (0.3, 0.075),
            (0.4, 0.1),
            (0.5, 0.1),
            (0.7, 0.075),
            (0.8, 0.03),
        ];
        let cauchy = [(0.2, 0.02), (0.8, 0.02)];
        let a: f64 = normals.iter().map(|(m, s)| normal_cdf((x - m) / s)).sum();
        let b: f64 = cauchy
            .iter()
            .map(|(l, s)| 0.5 + ((x - l) / s).atan() / std::f64::consts::PI)
            .sum();
        (a + b) / 8.0
    };
    let ks = ks_interior(draws(&dist, 5000, 4), cdf);
    assert!(ks < 1.63 / 5000f64.sqrt(), "{ks}");
}

#[test]
fn qmc_clipped_normal_mean_is_centre() {
    let dist = ContextDistribution::iid_normal(0.5, 0.15, 1).unwrap();
    let pts = qmc_context_samples(&dist, 1 << 14).unwrap();
    let mean = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    assert!((mean - 0.5).abs() < 1e-3, "{mean}");
    assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p[0])));
}

proptest! {
    #[test]
    fn sobol_is_stratified(dim in 1usize..=MAX_DIM.min(40), k in 1u32..10) {
        // every dyadic interval of width 2^-k holds exactly one of the first 2^k points
        let n = 1usize << k;
        let pts = sobol_points(dim, n).unwrap();
        for d in 0..dim {
            let mut seen = vec![false; n];
            for row in pts.rows() {
                let cell = (row[d] * n as f64) as usize;
                prop_assert!(!seen[cell]);
                seen[cell] = true;
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf(u in 0.001f64..0.999, mu in -2.0f64..2.0, sigma in 0.01f64..3.0) {
        let dist = ContextDistribution::new(
            ContextLaw::ClippedNormal { mu: vec![mu], sigma: vec![sigma] },
            vec![-1e9],
            vec![1e9],
        ).unwrap();
        let q = dist.quantile(&[u]).unwrap()[0];
        prop_assert!((normal_cdf((q - mu) / sigma) - u).abs() < 1e-12);
        let burr = ContextDistribution::unit(ContextLaw::BurrXII { alpha: 2.0, beta: 20.0 }, 1).unwrap();
        let b = burr.quantile(&[u]).unwrap()[0];
        prop_assert!((1.0 - (1.0 + b * b).powf(-20.0) - u).abs() < 1e-12);
    }
}
