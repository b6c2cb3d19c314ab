use ctxbo::kde::{rule_of_thumb_bandwidth, Bandwidth, KdeModel};
use ctxbo::qmc::normal_cdf;
use ctxbo::SeedStream;
use proptest::prelude::*;

fn samples_1d(seed: u64, n: usize, spread: f64) -> Vec<Vec<f64>> {
    let mut s = SeedStream::new(seed);
    (0..n)
        .map(|_| vec![spread * s.standard_normal() + s.uniform()])
        .collect()
}

/// Composite trapezoid rule on `[a, b]` with `nodes` points.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize) -> f64 {
    let h = (b - a) / (nodes - 1) as f64;
    let inner: f64 = (1..nodes - 1).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn density_integrates_to_one(seed in any::<u64>(), n in 1usize..200, spread in 0.01f64..3.0) {
        let samples = samples_1d(seed, n, spread);
        let kde = KdeModel::fit(samples.clone(), &[-1e6], &[1e6]).unwrap();
        let h = kde.bandwidth().max();
        let lo = samples.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min) - 5.0 * h;
        let hi = samples.iter().map(|s| s[0]).fold(f64::NEG_INFINITY, f64::max) + 5.0 * h;
        let total = trapezoid(|c| kde.density(&[c]), lo, hi, 100_000);
        prop_assert!((total - 1.0).abs() <= 1e-3, "integral {}", total);
    }

    #[test]
    fn reflection_symmetry(seed in any::<u64>(), n in 1usize..50, c in -3.0f64..3.0) {
        let samples = samples_1d(seed, n, 1.0);
        let mirrored: Vec<Vec<f64>> = samples.iter().map(|s| vec![-s[0]]).collect();
        let a = KdeModel::fit(samples, &[-10.0], &[10.0]).unwrap();
        let b = KdeModel::fit(mirrored, &[-10.0], &[10.0]).unwrap();
        prop_assert!((a.bandwidth().max() - b.bandwidth().max()).abs() <= 1e-12);
        prop_assert!((a.density(&[c]) - b.density(&[-c])).abs() <= 1e-12 * (1.0 + a.density(&[c])));
    }

    #[test]
    fn bandwidth_is_translation_invariant(seed in any::<u64>(), n in 2usize..50, shift in -100.0f64..100.0) {
        let samples = samples_1d(seed, n, 0.5);
        let moved: Vec<Vec<f64>> = samples.iter().map(|s| vec![s[0] + shift]).collect();
        let (a, b) = (rule_of_thumb_bandwidth(&samples).unwrap(), rule_of_thumb_bandwidth(&moved).unwrap());
        prop_assert!((a.max() - b.max()).abs() <= 1e-9 * a.max());
    }

    #[test]
    fn draws_stay_in_box(seed in any::<u64>(), n in 1usize..30) {
        let kde = KdeModel::fit(samples_1d(seed, n, 2.0), &[0.0], &[1.0]).unwrap();
        let draws = kde.sample(200, &mut SeedStream::new(seed));
        prop_assert!(draws.iter().all(|d| (0.0..=1.0).contains(&d[0])));
    }
}

#[test]
fn draws_follow_the_mixture_cdf() {
    let atoms = vec![vec![-1.0], vec![0.0], vec![0.5], vec![2.0]];
    let h = 0.3;
    let kde = KdeModel::with_bandwidth(atoms.clone(), Bandwidth::new(vec![h]).unwrap(), &[-100.0], &[100.0]).unwrap();
    let mut draws: Vec<f64> = kde
        .sample(5000, &mut SeedStream::new(9))
        .into_iter()
        .map(|d| d[0])
        .collect();
    draws.sort_by(f64::total_cmp);
    let cdf = |x: f64| atoms.iter().map(|a| normal_cdf((x - a[0]) / h)).sum::<f64>() / atoms.len() as f64;
    let n = draws.len() as f64;
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value for n = 5000
    assert!(ks < 1.63 / n.sqrt(), "KS statistic {ks}");
}
