use gpsl_core::kernels::*;
use gpsl_core::quadrature::*;
use gpsl_core::single_particle::*;
use gpsl_core::vec3;
use gpsl_core::Error;
use proptest::prelude::*;
use std::f64::consts::{PI, SQRT_2};

// F̃(d̃) from a deterministic real-space 2D quadrature (cylindrical
// coordinates, Gaussian weight), independent of the 4D reduced form
const F_TILDE_REF: [(f64, f64); 10] = [
    (0.01, 4.444_197_365e-4),
    (0.05, 0.011_100_951_2),
    (0.1, 0.044_284_775_4),
    (0.3, 0.387_343_991_2),
    (1.0, 3.140_976_044_4),
    (2.0, 4.966_411_952_9),
    (3.5, 2.166_913_480_6),
    (5.0, 0.629_670_293_9),
    (6.0, 0.303_936_616_7),
    (10.0, 0.039_022_455_5),
];

fn mc(evals: u64, seed: u64) -> QuadratureConfig {
    QuadratureConfig::stratified(evals, seed)
}

#[test]
fn f_tilde_matches_reference() {
    for (i, (d, want)) in F_TILDE_REF.iter().enumerate() {
        let r = f_tilde(*d, &mc(2_000_000, i as u64)).unwrap();
        let tol = 4.0 * r.error_estimate + 1e-9 * want;
        assert!((r.value - want).abs() < tol, "d̃ = {d}: {} ± {} vs {want}", r.value, r.error_estimate);
        if *d <= 3.5 {
            assert!(r.error_estimate < 0.01 * want, "d̃ = {d}: rel err {}", r.error_estimate / want);
        }
    }
    assert_eq!(f_tilde(0.0, &mc(1000, 0)).unwrap().value, 0.0);
}

#[test]
fn f_tilde_fit_values() {
    let r = f_tilde(0.1, &mc(1_000_000, 1)).unwrap();
    assert!((r.value / 0.0449 - 1.0).abs() < 0.1);
    let r = f_tilde(5.0, &mc(1_000_000, 2)).unwrap();
    let fit = 2.1 * (-(5.0 - 3.5) / 1.3f64).exp();
    assert!((r.value / fit - 1.0).abs() < 0.25, "{} vs {fit}", r.value);
}

#[test]
fn f_tilde_integrand_is_even_in_d() {
    let x = [0.3, 2.0, 0.7, 1.1];
    assert_eq!(f_tilde_integrand(-1.3, &x), f_tilde_integrand(1.3, &x));
}

#[test]
fn exact_rate_limits() {
    let p = ModelParams::unit();
    let particle = ParticleSpec::with_rp_ratio(0.3, &p).unwrap();
    let base = particle.mass;
    let cfg = mc(100_000, 4);
    assert_eq!(gamma_gpsl_exact(0.0, &particle, &p, &cfg).unwrap().rate, 0.0);
    let far = gamma_gpsl_exact(50.0, &particle, &p, &cfg).unwrap();
    assert!((far.rate / base - 1.0).abs() < 1e-10);
    assert!(far.warning.is_some());
    // negligible feedback length: collapse-only rate
    let tiny = ModelParams::new(1.0, 1.0, PhysicalConstants::new(1e-40, 1.0, 1.0).unwrap()).unwrap();
    let pt = ParticleSpec::new(2.0).unwrap();
    let r = gamma_gpsl_exact(1.0, &pt, &tiny, &cfg).unwrap();
    assert!((r.rate - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-15);
}

#[test]
fn exact_gravity_part_vs_perturbative() {
    // leading order in r_p the two agree; residual is O((r_p/r_C)²) relative
    let p = ModelParams::unit();
    for ratio in [1e-3, 1e-2] {
        let particle = ParticleSpec::with_rp_ratio(ratio, &p).unwrap();
        let ex = gpsl_gravity_part(1.0, &particle, &p, &mc(1_000_000, 9)).unwrap();
        let base = particle.mass;
        let pert = base * ratio * ratio * (-0.5f64).exp() * 3.140_976_044_4 / (2.0 * PI.powi(4));
        assert!((ex.value - pert).abs() < 3.0 * ex.error_estimate + 10.0 * ratio * ratio * pert, "{ratio}: {} ± {} vs {pert}", ex.value, ex.error_estimate);
        assert!(ex.error_estimate < 0.01 * pert);
        let full = gamma_gpsl_exact(1.0, &particle, &p, &mc(1_000_000, 9)).unwrap();
        let pr = gamma_gpsl_perturbative(1.0, &particle, &p, FTildeSource::Direct(mc(1_000_000, 9))).unwrap();
        assert!((full.rate - pr.rate).abs() < 10.0 * ratio * ratio * full.rate);
    }
}

#[test]
fn perturbative_limits_and_guard() {
    let p = ModelParams::unit();
    let vals: Vec<f64> = (0..=120).map(|i| (i as f64 * 0.05).powi(2) * 4.4).collect();
    let table = FTildeTable::from_values(0.05, vals).unwrap();
    let particle = ParticleSpec::with_rp_ratio(0.1, &p).unwrap();
    assert_eq!(gamma_gpsl_perturbative(0.0, &particle, &p, FTildeSource::Table(&table)).unwrap().rate, 0.0);
    let big = ParticleSpec::with_rp_ratio(0.2, &p).unwrap();
    assert!(matches!(
        gamma_gpsl_perturbative(1.0, &big, &p, FTildeSource::Table(&table)),
        Err(Error::Validity(_))
    ));
    let tiny = ModelParams::new(1.0, 1.0, PhysicalConstants::new(1e-40, 1.0, 1.0).unwrap()).unwrap();
    let pt = ParticleSpec::new(1.0).unwrap();
    let r = gamma_gpsl_perturbative(2.0, &pt, &tiny, FTildeSource::Table(&table)).unwrap();
    assert!((r.rate - collapse_factor(2.0)).abs() < 1e-15);
}

#[test]
fn gravity_part_short_ranged() {
    let p = ModelParams::unit();
    let particle = ParticleSpec::with_rp_ratio(0.1, &p).unwrap();
    let cfg = mc(400_000, 2);
    let peak = [1.0, 1.5, 2.0, 2.5]
        .iter()
        .map(|&d| gpsl_gravity_part(d, &particle, &p, &cfg).unwrap().value)
        .fold(0.0, f64::max);
    let far = gpsl_gravity_part(10.0, &particle, &p, &cfg).unwrap();
    assert!(far.value + 3.0 * far.error_estimate < 1e-3 * peak, "{} vs peak {peak}", far.value);
}

#[test]
fn dp_closed_form() {
    let si = ModelParams::new(1e-9, 1e-7, PhysicalConstants::codata()).unwrap();
    let particle = ParticleSpec::new(1e-21).unwrap();
    let c = si.constants;
    let plateau = 2.0 * SQRT_2 * PI * c.g * 1e-42 / (c.hbar * 1e-7);
    assert!((dp_plateau(&particle, &si) / plateau - 1.0).abs() < 1e-12);
    assert_eq!(gamma_td_dp(0.0, &particle, &si).unwrap().rate, 0.0);
    let one = gamma_td_dp(1.0, &particle, &si).unwrap().rate;
    let want = plateau * (1.0 - PI.sqrt() / 2.0 * erf(1.0));
    assert!((one / want - 1.0).abs() < 1e-14);
    let far = gamma_td_dp(1e9, &particle, &si).unwrap().rate;
    assert!((far / plateau - 1.0).abs() < 1e-8);
    assert!(dp_bracket(1e-5) > 0.0 && dp_bracket(1e-5) < 1e-9);
}

#[test]
fn csl_asymptotes() {
    let p = ModelParams::unit();
    let particle = ParticleSpec::new(1.0).unwrap();
    let td = TDParams::new(1.0).unwrap();
    let pre = 1.0 / 8.0; // m0² m_p² G² / (8 ħ² γ_CSL)
    for d in [1e-3, 1e-2] {
        let (_, g) = td_csl_parts(d, &particle, &p, &td).unwrap();
        let want = 16.0 * PI.sqrt() / 3.0 * d * d * pre;
        assert!((g / want - 1.0).abs() < 2.0 * d, "d = {d}: {g} vs {want}");
    }
    for d in [50.0, 200.0] {
        let (_, g) = td_csl_parts(d, &particle, &p, &td).unwrap();
        let want = 8.0 * PI * d * pre;
        assert!((g / want - 1.0).abs() < 2.0 / d, "d = {d}: {g} vs {want}");
    }
    let (col, _) = td_csl_parts(1.0, &particle, &p, &td).unwrap();
    assert!((col - (4.0 * PI).powf(-1.5) * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    let (_, g0) = td_csl_parts(0.0, &particle, &p, &td).unwrap();
    assert_eq!(g0, 0.0);
}

#[test]
fn csl_gravity_part_vs_defining_integral() {
    // (m0² m_p² G²/(8ħ²γ_CSL)) ∫ d³z [f(z) - f(z + D)]², |D| = 2 d̃ r_C
    let p = ModelParams::unit();
    let particle = ParticleSpec::new(1.0).unwrap();
    let td = TDParams::new(1.0).unwrap();
    let d = 1.0;
    let dv = [0.0, 0.0, 2.0 * d];
    let sampler = Mixture3::new(vec![
        (1.0, Component::Coulomb { center: [0.0; 3], a: 2.0 }),
        (1.0, Component::Coulomb { center: vec3::scale(&dv, -1.0), a: 2.0 }),
    ])
    .unwrap();
    let r = integrate_nd_mc(
        |x| {
            let z = [x[0], x[1], x[2]];
            let a = erf_kernel_f(vec3::norm(&z), 1.0) - erf_kernel_f(vec3::norm(&vec3::add(&z, &dv)), 1.0);
            a * a
        },
        &sampler,
        &mc(1_000_000, 6),
    )
    .unwrap();
    let want = r.value / 8.0;
    let (_, g) = td_csl_parts(d, &particle, &p, &td).unwrap();
    assert!((g / want - 1.0).abs() < 1e-2, "{g} vs {want} ± {}", r.error_estimate / 8.0);
    assert!(gamma_td_csl(1.0, &particle, &p, &td).unwrap().rate > g);
}

#[test]
fn self_interaction_vanishes() {
    assert_eq!(self_interaction_null_check(0.0, &mc(1000, 1)).unwrap().value, 0.0);
    for (i, d) in [0.5, 1.0, 3.0].into_iter().enumerate() {
        let r = self_interaction_null_check(d, &mc(400_000, i as u64)).unwrap();
        assert!(r.value.abs() < 3.0 * r.error_estimate, "d̃ = {d}: {} ± {}", r.value, r.error_estimate);
    }
}

#[test]
fn model_ordering_at_large_separation() {
    // TD-DP saturates, TD-CSL grows linearly, GPSL gravity part decays
    let p = ModelParams::unit();
    let particle = ParticleSpec::with_rp_ratio(0.1, &p).unwrap();
    let td = TDParams::new(1.0).unwrap();
    let cfg = mc(200_000, 3);
    let grid = [2.0, 5.0, 10.0];
    let dp: Vec<f64> = grid.iter().map(|&d| gamma_td_dp(d, &particle, &p).unwrap().rate).collect();
    let csl: Vec<f64> = grid.iter().map(|&d| td_csl_parts(d, &particle, &p, &td).unwrap().1).collect();
    let gp: Vec<f64> = grid.iter().map(|&d| gpsl_gravity_part(d, &particle, &p, &cfg).unwrap().value).collect();
    assert!(dp[0] < dp[1] && dp[1] < dp[2]);
    assert!(dp[2] / dp[1] < 1.2);
    assert!(csl[2] / csl[1] > 1.8);
    assert!(gp[0] > gp[1] && gp[1] > gp[2]);
}

#[test]
fn crossover_mass() {
    let p = ModelParams::new(1e-9, 1e-7, PhysicalConstants::codata()).unwrap();
    let c = p.constants;
    // γ m/m0 = 2√2π G m²/(ħ r_C)
    let m_star = p.gamma * c.hbar * p.r_c / (c.m0 * 2.0 * SQRT_2 * PI * c.g);
    let particle = ParticleSpec::new(2.0 * m_star).unwrap();
    let gpsl = gamma_gpsl_exact(50.0, &particle, &p, &mc(1000, 0)).unwrap().rate;
    let dp = dp_plateau(&particle, &p);
    assert!(gpsl < dp);
    assert!((gpsl / (p.gamma * 2.0 * m_star / c.m0) - 1.0).abs() < 1e-10);
    assert!((dp / gpsl - 2.0).abs() < 1e-10);
}

#[test]
fn curve_validation() {
    let p = ModelParams::unit();
    let particle = ParticleSpec::new(1.0).unwrap();
    let pts: Vec<_> = [0.5, 1.0, 2.0].iter().map(|&d| gamma_td_dp(d, &particle, &p).unwrap()).collect();
    assert!(DecoherenceCurve::new(Model::TdDp, pts.clone(), p).is_ok());
    let mut bad = pts;
    bad.swap(0, 1);
    assert!(DecoherenceCurve::new(Model::TdDp, bad, p).is_err());
    assert!(gamma_td_dp(-1.0, &particle, &p).is_err());
}

#[test]
fn table_is_deterministic_across_pools() {
    let cfg = mc(20_000, 42);
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| FTildeTable::compute_grid(0.5, 3.0, &cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_rates_nonnegative(d in 0.0f64..100.0) {
        let p = ModelParams::unit();
        let particle = ParticleSpec::new(1.0).unwrap();
        let td = TDParams::new(1.0).unwrap();
        prop_assert!(gamma_td_dp(d, &particle, &p).unwrap().rate >= 0.0);
        prop_assert!(gamma_td_csl(d, &particle, &p, &td).unwrap().rate >= 0.0);
        prop_assert!(collapse_factor(d) >= 0.0 && collapse_factor(d) <= 1.0);
    }

    #[test]
    fn dp_monotone(d in 0.0f64..50.0, h in 1e-3f64..1.0) {
        prop_assert!(dp_bracket(d + h) >= dp_bracket(d));
    }

    #[test]
    fn exact_rate_bounded(d in 0.0f64..8.0, seed in 0u64..100) {
        let p = ModelParams::unit();
        let particle = ParticleSpec::with_rp_ratio(0.5, &p).unwrap();
        let r = gamma_gpsl_exact(d, &particle, &p, &mc(4_000, seed)).unwrap();
        prop_assert!(r.rate >= -3.0 * r.error);
        prop_assert!(r.rate <= particle.mass + 3.0 * r.error);
    }
}
