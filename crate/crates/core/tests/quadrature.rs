use gpsl_core::quadrature::*;
use gpsl_core::vec3;
use gpsl_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn tight() -> QuadratureConfig {
    QuadratureConfig::adaptive(1e-14, 1e-13)
}

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

// composite Simpson on [a, b] with step h
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, h: f64) -> f64 {
    let n = ((b - a) / h).round() as usize;
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn polynomial_on_unit_interval() {
    let r = integrate_1d(|x| x * x, 0.0, 1.0, &tight()).unwrap();
    assert!(r.converged);
    assert!((r.value - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn half_gaussian() {
    let r = integrate_1d(|x| (-x * x).exp(), 0.0, Upper::Infinity(Envelope::Gaussian { width: 1.0 }), &tight()).unwrap();
    assert!((r.value - PI.sqrt() / 2.0).abs() < 1e-13);
}

#[test]
fn oscillating_gaussian_vs_simpson_oracle() {
    let f = |x: f64| (10.0 * x).sin() * (-x * x).exp();
    let want = simpson(f, 0.0, 8.0, 1e-4);
    let r = integrate_1d(f, 0.0, Upper::Infinity(Envelope::Gaussian { width: 1.0 }), &tight()).unwrap();
    assert!((r.value - want).abs() < 1e-8, "{} vs {want}", r.value);
    // Dawson function D(5), mpmath
    assert!((r.value - 0.102_134_074_424_276_84).abs() < 1e-12);
}

#[test]
fn cancelling_integral_hits_budget_quickly() {
    // ∫₀^√2 (x³ - x) dx = 0: the relative tolerance is out of reach
    let t0 = std::time::Instant::now();
    let r = integrate_1d(|x| x * x * x - x, 0.0, 2f64.sqrt(), &QuadratureConfig::adaptive(1e-300, 1e-13)).unwrap();
    assert!(r.value.abs() < 1e-13, "{}", r.value);
    assert!(!r.converged);
    assert!(t0.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn exponential_envelope() {
    let r = integrate_1d(|x| x * (-x).exp(), 0.0, Upper::Infinity(Envelope::Exponential { scale: 1.0 }), &tight()).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
}

#[test]
fn converged_results_meet_tolerance() {
    let cfg = QuadratureConfig::adaptive(1e-10, 1e-8);
    for f in [|x: f64| x.sqrt(), |x: f64| (1.0 + x).ln(), |x: f64| 1.0 / (1.0 + 25.0 * x * x)] {
        let r = integrate_1d(f, 0.0, 1.0, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.error_estimate <= 1e-10f64.max(1e-8 * r.value.abs()));
    }
}

#[test]
fn nonconvergence_is_reported_with_estimate() {
    let cfg = QuadratureConfig { max_evals: 45, ..QuadratureConfig::adaptive(1e-15, 1e-15) };
    let r = integrate_1d(|x| (50.0 * x).sin() / x.sqrt(), 1e-9, 1.0, &cfg).unwrap();
    assert!(!r.converged);
    assert!(r.value.is_finite());
}

#[test]
fn bad_intervals_rejected() {
    assert!(integrate_1d(|x| x, 1.0, 0.0, &tight()).is_err());
    assert!(integrate_1d(|x| x, 0.0, f64::INFINITY, &tight()).is_err());
    assert!(integrate_1d(|x| x, f64::NAN, 1.0, &tight()).is_err());
}

#[test]
fn unit_ball_volume() {
    let cfg = QuadratureConfig::stratified(400_000, 1);
    let r = integrate_nd_mc(
        |x| f64::from(u8::from(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0)),
        &ProductSampler::cube(3, -1.0, 1.0),
        &cfg,
    )
    .unwrap();
    assert!((r.value - 4.0 * PI / 3.0).abs() < 3.0 * r.error_estimate, "{} ± {}", r.value, r.error_estimate);
    let plain = QuadratureConfig::plain(400_000, 1);
    let p = integrate_nd_mc(
        |x| f64::from(u8::from(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0)),
        &ProductSampler::cube(3, -1.0, 1.0),
        &plain,
    )
    .unwrap();
    assert!((p.value - 4.0 * PI / 3.0).abs() < 3.0 * p.error_estimate);
    assert!(r.error_estimate < p.error_estimate);
}

fn coulomb_identity(d: f64, seed: u64, evals: u64) -> IntegralResult {
    let dv = [0.0, 0.0, d];
    let sampler = Mixture3::new(vec![
        (1.0, Component::Coulomb { center: [0.0; 3], a: d }),
        (1.0, Component::Coulomb { center: vec3::scale(&dv, -1.0), a: d }),
    ])
    .unwrap();
    integrate_nd_mc(
        |x| {
            let z = [x[0], x[1], x[2]];
            let a = 1.0 / vec3::norm(&z) - 1.0 / vec3::norm(&vec3::add(&z, &dv));
            a * a
        },
        &sampler,
        &QuadratureConfig::stratified(evals, seed),
    )
    .unwrap()
}

#[test]
fn coulomb_difference_identity() {
    for d in [0.5, 1.0, 2.0, 5.0] {
        let r = coulomb_identity(d, 17, 1_000_000);
        let want = 4.0 * PI * d;
        assert!((r.value - want).abs() < 3.0 * r.error_estimate, "|D| = {d}: {} ± {}", r.value, r.error_estimate);
        assert!((r.value / want - 1.0).abs() < 1e-2);
    }
}

#[test]
fn mc_bit_identical_across_runs_and_pools() {
    let run = || coulomb_identity(1.0, 5, 200_000);
    let a = pool(1).install(run);
    let b = pool(4).install(run);
    let c = pool(3).install(run);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a, run());
    let plain = |n| {
        pool(n).install(|| {
            integrate_nd_mc(|x| x[0] * x[1], &ProductSampler::normal3(&[1.0, 2.0, 0.0], 1.0), &QuadratureConfig::plain(50_000, 2))
                .unwrap()
        })
    };
    assert_eq!(plain(1), plain(4));
}

#[test]
fn doubling_budget_does_not_increase_error() {
    let suite: Vec<Box<dyn Fn(&[f64]) -> f64 + Sync>> = vec![
        Box::new(|x: &[f64]| f64::from(u8::from(x[0] * x[0] + x[1] * x[1] < 1.0))),
        Box::new(|x: &[f64]| (x[0] * 3.0).cos() * x[1] * x[1]),
        Box::new(|x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp()),
    ];
    for (i, f) in suite.iter().enumerate() {
        let mut last = f64::INFINITY;
        for evals in [10_000u64, 20_000, 40_000, 80_000, 160_000] {
            let r = integrate_nd_mc(f, &ProductSampler::cube(2, -1.0, 1.0), &QuadratureConfig::stratified(evals, 3)).unwrap();
            assert!(r.error_estimate <= last, "integrand {i} at {evals}: {} > {last}", r.error_estimate);
            last = r.error_estimate;
        }
    }
}

#[test]
fn nan_integrand_aborts_with_count() {
    let r = integrate_nd_mc(
        |x| if x[0] > 0.9 { f64::NAN } else { 1.0 },
        &ProductSampler::cube(2, 0.0, 1.0),
        &QuadratureConfig::stratified(10_000, 1),
    );
    match r {
        Err(Error::BadIntegrand { bad, total }) => {
            assert!(bad > 0 && bad < total);
        }
        other => panic!("expected BadIntegrand, got {other:?}"),
    }
}

#[test]
fn dimension_limits() {
    let cfg = QuadratureConfig::stratified(1000, 1);
    assert!(integrate_nd_mc(|_| 1.0, &ProductSampler::cube(1, 0.0, 1.0), &cfg).is_err());
    assert!(integrate_nd_mc(|_| 1.0, &ProductSampler::cube(7, 0.0, 1.0), &cfg).is_err());
    let r = integrate_nd_mc(|_| 1.0, &ProductSampler::cube(6, 0.0, 1.0), &cfg).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
}

#[test]
fn invalid_config_rejected() {
    let bad = QuadratureConfig { max_evals: 0, ..QuadratureConfig::stratified(10, 1) };
    assert!(integrate_nd_mc(|_| 1.0, &ProductSampler::cube(2, 0.0, 1.0), &bad).is_err());
    let bad = QuadratureConfig::adaptive(-1.0, 1e-3);
    assert!(integrate_1d(|x| x, 0.0, 1.0, &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gaussian_weight_integrates_to_one(c in prop::array::uniform3(-3.0f64..3.0), sd in 0.1f64..5.0, seed in any::<u64>()) {
        let s = ProductSampler::normal3(&c, sd);
        let r = integrate_nd_mc(
            |x| gpsl_core::kernels::gauss_r2(vec3::norm2(&vec3::sub(&[x[0], x[1], x[2]], &c)), sd),
            &s,
            &QuadratureConfig::stratified(4_000, seed),
        ).unwrap();
        prop_assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_exact_for_cubics(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, hi in 0.1f64..4.0) {
        let r = integrate_1d(|x| a * x * x * x + b * x + c, 0.0, hi, &tight()).unwrap();
        let want = a * hi.powi(4) / 4.0 + b * hi * hi / 2.0 + c * hi;
        prop_assert!((r.value - want).abs() < 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn derived_seeds_distinct(seed in any::<u64>(), i in 0u64..1_000_000) {
        prop_assert_ne!(derive_seed(seed, i), derive_seed(seed, i + 1));
    }
}
