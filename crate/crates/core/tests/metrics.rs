use ctxbo::kde::KdeModel;
use ctxbo::metrics::{aggregate, expectation_qmc, find_optimum, tv_discrepancy, RegretCurve};
use ctxbo::problems::{ContextDistribution, Problem};
use ctxbo::SeedStream;
use proptest::prelude::*;

/// `8 * int_0^x S(d) dd - 4x`, S the Burr(2, 20) survival function, by Simpson's rule.
fn newsvendor_oracle(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let s = |d: f64| (1.0 + d * d).powf(-20.0);
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * s(i as f64 * h))
        .sum();
    8.0 * h / 3.0 * (s(0.0) + inner + s(x)) - 4.0 * x
}

#[test]
fn newsvendor_expectation_matches_integral() {
    let p = Problem::by_name("newsvendor").unwrap();
    for x in [0.05, 0.1878, 0.3, 0.7] {
        let est = expectation_qmc(&p, &[x], 1 << 16).unwrap();
        assert!(
            (est - newsvendor_oracle(x)).abs() < 1e-4,
            "x={x}: {est} vs {}",
            newsvendor_oracle(x)
        );
    }
}

#[test]
fn newsvendor_optimum_is_the_fractile() {
    let p = Problem::by_name("newsvendor").unwrap();
    let gt = find_optimum(&p, 1 << 14, 4, &mut SeedStream::new(1)).unwrap();
    let fractile = (2f64.powf(1.0 / 20.0) - 1.0).sqrt();
    assert!((gt.x_star[0] - fractile).abs() < 5e-3, "{:?}", gt.x_star);
    assert!((gt.f_star - newsvendor_oracle(fractile)).abs() < 1e-3);
}

#[test]
fn ground_truth_is_stable_across_optimizer_seeds() {
    let p = Problem::by_name("ackley").unwrap();
    let a = find_optimum(&p, 1 << 12, 4, &mut SeedStream::new(1)).unwrap();
    let b = find_optimum(&p, 1 << 12, 4, &mut SeedStream::new(2)).unwrap();
    assert!((a.f_star - b.f_star).abs() < 1e-6);
}

#[test]
fn tv_shrinks_with_more_samples() {
    let dist = ContextDistribution::iid_normal(0.5, 0.1, 1).unwrap();
    let tv = |n: usize| {
        let mut s = SeedStream::new(5);
        let samples: Vec<Vec<f64>> = (0..n).map(|_| dist.sample(&mut s)).collect();
        tv_discrepancy(&KdeModel::fit(samples, &[0.0], &[1.0]).unwrap(), &dist, 10_000).unwrap()
    };
    let (small, large) = (tv(20), tv(5000));
    assert!(large < small && large < 0.1, "{small} {large}");
}

proptest! {
    #[test]
    fn cumulative_is_running_sum(inst in prop::collection::vec(-10.0f64..10.0, 1..100)) {
        let c = RegretCurve::from_instantaneous(0, inst.clone());
        let mut acc = 0.0;
        for (v, cum) in inst.iter().zip(&c.cumulative) {
            acc += v;
            prop_assert!((acc - cum).abs() <= 1e-9);
        }
        prop_assert!((c.total() - acc).abs() <= 1e-9);
    }

    #[test]
    fn aggregate_matches_hand_formula(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 5), 2..8)) {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let agg = aggregate(&refs).unwrap();
        let n = rows.len() as f64;
        for t in 0..5 {
            let mean = rows.iter().map(|r| r[t]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((agg.mean[t] - mean).abs() <= 1e-12);
            prop_assert!((agg.stderr[t] - (var / n).sqrt()).abs() <= 1e-12);
        }
    }
}
