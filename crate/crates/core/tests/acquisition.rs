use ctxbo::acquisition::{optimize_acquisition, Acquisition, AcquisitionSpec, OptimizerSettings};
use ctxbo::dro::inf_ucb_over_context;
use ctxbo::gp::{GpHyperparams, GpPosterior, TrainingSet};
use ctxbo::kde::KdeModel;
use ctxbo::sobol::sobol_in_box;
use ctxbo::SeedStream;
use proptest::prelude::*;

const UNIT: (&[f64], &[f64]) = (&[0.0], &[1.0]);

/// Noiseless surrogate of `f(x, c)` on a 2-D Sobol design.
fn surrogate(f: impl Fn(f64, f64) -> f64) -> GpPosterior {
    let rows = sobol_in_box(&[0.0, 0.0], &[1.0, 1.0], 32).unwrap();
    let y: Vec<f64> = rows.iter().map(|r| f(r[0], r[1])).collect();
    let hyper = GpHyperparams {
        lengthscales: vec![0.5, 0.5],
        signal_variance: 1.0,
        noise_variance: 1e-6,
    };
    GpPosterior::fit(&TrainingSet::from_rows(&rows, &y).unwrap(), &hyper).unwrap()
}

fn kde() -> KdeModel {
    let mut s = SeedStream::new(2);
    let samples: Vec<Vec<f64>> = (0..30)
        .map(|_| vec![(0.5 + 0.15 * s.standard_normal()).clamp(0.0, 1.0)])
        .collect();
    KdeModel::fit(samples, &[0.0], &[1.0]).unwrap()
}

fn small() -> OptimizerSettings {
    OptimizerSettings {
        raw_samples: 64,
        num_restarts: 4,
        max_iter: 50,
    }
}

#[test]
fn maximizer_of_identity_in_x_is_upper_bound() {
    let post = surrogate(|x, _| x);
    let kde = kde();
    let specs = [
        AcquisitionSpec::ExpectedUcb {
            sqrt_beta: 0.0,
            m_samples: 64,
        },
        AcquisitionSpec::RobustUcb {
            sqrt_beta: 0.0,
            m_samples: 64,
            delta: 0.2,
            n_inf_grid: 32,
        },
        AcquisitionSpec::StableUcb {
            sqrt_beta: 0.0,
            lower: vec![0.2],
            upper: vec![0.8],
            n_grid: 16,
        },
    ];
    for spec in &specs {
        let acq = Acquisition::prepare(spec, &post, Some(&kde), UNIT, UNIT, &mut SeedStream::new(1)).unwrap();
        let out = optimize_acquisition(&acq, &[0.0], &[1.0], &small()).unwrap();
        let (best_x, best_v) = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|x| (x, acq.value(&[x])))
            .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        assert!(
            out.value >= best_v - 1e-6,
            "{spec:?}: {} vs dense {best_v} at {best_x}",
            out.value
        );
        assert!(
            out.x[0] > 0.9 && (out.value - 1.0).abs() < 0.05,
            "{spec:?}: {:?} {}",
            out.x,
            out.value
        );
        assert!(out.value >= out.best_raw_value);
    }
}

#[test]
fn plain_ucb_finds_interior_peak() {
    let rows = sobol_in_box(&[0.0], &[1.0], 16).unwrap();
    let y: Vec<f64> = rows.iter().map(|r| -(r[0] - 0.37).powi(2)).collect();
    let hyper = GpHyperparams {
        lengthscales: vec![0.5],
        signal_variance: 1.0,
        noise_variance: 1e-8,
    };
    let post = GpPosterior::fit(&TrainingSet::from_rows(&rows, &y).unwrap(), &hyper).unwrap();
    let acq = Acquisition::prepare(
        &AcquisitionSpec::PlainUcb { sqrt_beta: 0.0 },
        &post,
        None,
        UNIT,
        UNIT,
        &mut SeedStream::new(0),
    )
    .unwrap();
    let out = optimize_acquisition(&acq, &[0.0], &[1.0], &small()).unwrap();
    assert!((out.x[0] - 0.37).abs() < 1e-3, "{:?}", out.x);
}

#[test]
fn robust_value_is_between_infimum_and_mean() {
    let post = surrogate(|x, c| (3.0 * x).sin() * (1.0 + c));
    let kde = kde();
    let mk = |delta: f64| AcquisitionSpec::RobustUcb {
        sqrt_beta: 1.0,
        m_samples: 128,
        delta,
        n_inf_grid: 64,
    };
    let expected = AcquisitionSpec::ExpectedUcb {
        sqrt_beta: 1.0,
        m_samples: 128,
    };
    for x in [0.1, 0.4, 0.9] {
        let e = Acquisition::prepare(&expected, &post, Some(&kde), UNIT, UNIT, &mut SeedStream::new(3))
            .unwrap()
            .value(&[x]);
        let r0 = Acquisition::prepare(&mk(0.0), &post, Some(&kde), UNIT, UNIT, &mut SeedStream::new(3))
            .unwrap()
            .value(&[x]);
        let r = Acquisition::prepare(&mk(0.5), &post, Some(&kde), UNIT, UNIT, &mut SeedStream::new(3))
            .unwrap()
            .value(&[x]);
        let grid = sobol_in_box(&[0.0], &[1.0], 64).unwrap();
        let inf = inf_ucb_over_context(&post, &[x], 1.0, &grid);
        assert!((r0 - e).abs() < 1e-10);
        assert!(r <= e + 1e-12 && r >= inf - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inf_over_grid_matches_dense_scan(x in 0.0f64..1.0, sqrt_beta in 0.0f64..3.0, n in 1usize..200) {
        let post = surrogate(|x, c| (4.0 * c).cos() + x * c);
        let grid = sobol_in_box(&[0.0], &[1.0], n).unwrap();
        let got = inf_ucb_over_context(&post, &[x], sqrt_beta, &grid);
        let brute = grid
            .iter()
            .map(|c| post.ucb(&[x, c[0]], sqrt_beta))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((got - brute).abs() <= 1e-12);
        // a coarse grid never undershoots the dense infimum
        let dense = (0..=10_000)
            .map(|i| post.ucb(&[x, i as f64 / 10_000.0], sqrt_beta))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(got >= dense - 1e-6);
    }

    #[test]
    fn expected_ucb_is_context_average(x in 0.0f64..1.0, seed in any::<u64>()) {
        let post = surrogate(|x, c| x * x - c);
        let spec = AcquisitionSpec::ExpectedUcb { sqrt_beta: 0.5, m_samples: 32 };
        let acq = Acquisition::prepare(&spec, &post, Some(&kde()), UNIT, UNIT, &mut SeedStream::new(seed)).unwrap();
        let vals = acq.context_values(&[x]);
        prop_assert_eq!(vals.len(), 32);
        prop_assert!((acq.value(&[x]) - vals.iter().sum::<f64>() / 32.0).abs() <= 1e-12);
    }
}
