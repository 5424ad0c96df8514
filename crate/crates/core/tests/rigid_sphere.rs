use gpsl_core::kernels::{ModelParams, PhysicalConstants, TDParams};
use gpsl_core::quadrature::QuadratureConfig;
use gpsl_core::rigid_sphere::*;
use gpsl_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn mc(evals: u64, seed: u64) -> QuadratureConfig {
    QuadratureConfig::stratified(evals, seed)
}

fn below(x: f64) -> f64 {
    x * (1.0 - f64::EPSILON)
}

// log-log least-squares slope on 41 log-spaced points of [lo, hi]
fn fitted_exponent(f: fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = (0..41)
        .map(|i| {
            let x = lo * (hi / lo).powf(i as f64 / 40.0);
            (x.ln(), f(x).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

#[test]
fn overlap_fraction_end_points() {
    assert_eq!(k_c(0.0), 1.0);
    assert_eq!(k_c(1.0), 0.0);
    assert_eq!(k_c(3.0), 0.0);
    assert!(k_c(below(1.0)).abs() < 1e-12);
}

#[test]
fn overlap_fraction_vs_mc() {
    for (i, x) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let r = k_c_mc(x, &mc(4_000_000, i as u64)).unwrap();
        assert!((r.value - k_c(x)).abs() < 1e-3, "x = {x}: {} ± {} vs {}", r.value, r.error_estimate, k_c(x));
    }
}

#[test]
fn branch_continuity() {
    let one = 1.0;
    assert!((k_g_csl(below(one)) - k_g_csl(one)).abs() < 1e-12);
    assert!((k_g_dp(below(one)) - k_g_dp(one)).abs() < 1e-12);
    assert!((k_g_gpsl(below(one)) - k_g_gpsl(one)).abs() < 1e-12);
    assert!((f_sp(below(one)) - f_sp(one)).abs() < 1e-12);
    assert!((k_g_dp(one) - DP_PREFACTOR * 1.4).abs() < 1e-15);
    assert!((k_g_csl(one) - 41.0 * PI / 70.0).abs() < 1e-15);
    assert!((f_sp(one) - 1.0 / (3.0 * PI)).abs() < 1e-16);
    assert!((DP_PREFACTOR - PI.powf(1.5) / (2.0 * 2f64.sqrt())).abs() < 1e-15);
}

#[test]
fn kernel_limits() {
    assert_eq!(k_g_gpsl(0.0), 0.0);
    assert_eq!(k_g_dp(0.0), 0.0);
    assert_eq!(k_g_csl(0.0), 0.0);
    for x in [1.0, 1.5, 10.0] {
        assert_eq!(k_g_gpsl(x), 0.0);
        assert_eq!(k_g_gpsl_integral(x), 0.0);
    }
    assert!((k_g_dp(1e12) / (DP_PREFACTOR * 2.4) - 1.0).abs() < 1e-11);
    let slope = (k_g_csl(2e6) - k_g_csl(1e6)) / 1e6;
    assert!((slope - PI).abs() < 1e-8);
    // closed-form GPSL kernel: (3π/4) x² at small x
    for x in [1e-6, 1e-5] {
        assert!((k_g_gpsl(x) / (x * x) / (0.75 * PI) - 1.0).abs() < 4.0 * x);
    }
    assert!((k_g_gpsl_integral(1e-6) / 1e-12 - 0.4).abs() < 1e-5);
}

#[test]
fn quadratic_behaviour() {
    assert!((fitted_exponent(k_g_dp, 1e-3, 1e-1) - 2.0).abs() < 0.02);
    assert!((fitted_exponent(k_g_csl, 1e-3, 1e-1) - 2.0).abs() < 0.02);
    assert!((fitted_exponent(k_g_gpsl, 1e-5, 1e-3) - 2.0).abs() < 0.02);
    assert!((fitted_exponent(k_g_gpsl_integral, 1e-5, 1e-3) - 2.0).abs() < 0.02);
    // linear correction of the GPSL forms lowers the exponent on the wider window
    assert!((fitted_exponent(k_g_gpsl, 1e-3, 1e-1) - 1.962).abs() < 1e-3);
}

#[test]
fn f_sp_and_indicator_transform() {
    assert!((f_sp(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-16);
    for r in [1.0f64, 2.5] {
        let lim = (2.0 / PI).sqrt() * r.powi(3) / 3.0;
        assert!((chi_tilde(0.0, r) / lim - 1.0).abs() < 1e-15);
        assert!((chi_tilde(1e-7 / r, r) / lim - 1.0).abs() < 1e-12);
        // series/closed-form switch at kR = 1e-3
        let a = chi_tilde(below(1e-3) / r, r);
        let b = chi_tilde(1e-3 / r * (1.0 + f64::EPSILON), r);
        assert!((a / b - 1.0).abs() < 1e-9);
    }
    let k: f64 = 2.3;
    let want = (2.0 / PI).sqrt() * (k.sin() - k * k.cos()) / k.powi(3);
    assert!((chi_tilde(k, 1.0) - want).abs() < 1e-15);
}

#[test]
fn ball_potential_matches_f_sp() {
    for x in [0.0, 0.3, 0.99, 1.0, 2.0, 7.0] {
        assert!((ball_potential(x, 1.0) / (4.0 * PI * PI) - f_sp(x)).abs() < 1e-15);
    }
    let r = 1.7;
    assert!((ball_potential(0.0, r) - 2.0 * PI * r * r).abs() < 1e-14);
    assert!((ball_potential(3.0 * r, r) - 4.0 * PI * r.powi(3) / (3.0 * 3.0 * r)).abs() < 1e-13);
    assert!((ball_potential(below(r), r) - ball_potential(r, r)).abs() < 1e-12);
}

#[test]
fn gpsl_lens_integral_vs_mc() {
    for (i, x) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let r = k_g_gpsl_mc(x, &mc(4_000_000, 10 + i as u64)).unwrap();
        let want = k_g_gpsl_integral(x);
        assert!((r.value / want - 1.0).abs() < 1e-2, "x = {x}: {} ± {} vs {want}", r.value, r.error_estimate);
    }
}

#[test]
fn dp_integral_vs_mc() {
    for (i, x) in [0.25, 0.5, 0.75, 1.5].into_iter().enumerate() {
        let r = k_g_dp_mc(x, &mc(4_000_000, 20 + i as u64)).unwrap();
        let want = k_g_dp_integral(x);
        assert!((r.value / want - 1.0).abs() < 1e-2, "x = {x}: {} ± {} vs {want}", r.value, r.error_estimate);
        // same shape as the closed form
        assert!((k_g_dp(x) / want - 4.0 * DP_PREFACTOR).abs() < 1e-12);
    }
}

#[test]
fn csl_kernel_vs_mc() {
    for (i, x) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let r = k_g_csl_mc(x, &mc(4_000_000, 30 + i as u64)).unwrap();
        let want = k_g_csl(x);
        assert!((r.value / want - 1.0).abs() < 1e-2, "x = {x}: {} ± {} vs {want}", r.value, r.error_estimate);
    }
}

#[test]
fn unitary_term_vanishes() {
    assert_eq!(unitary_term_sphere_check(0.0, &mc(1000, 0)).unwrap().value, 0.0);
    for (i, d) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let r = unitary_term_sphere_check(d, &mc(1_000_000, i as u64)).unwrap();
        assert!(r.value.abs() <= 3.0 * r.error_estimate, "D̃ = {d}: {} ± {}", r.value, r.error_estimate);
    }
}

fn si() -> ModelParams {
    ModelParams::new(1e-9, 1e-7, PhysicalConstants::codata()).unwrap()
}

#[test]
fn sphere_rates() {
    let p = si();
    let s = SphereSpec::from_density(2000.0, 1e-5).unwrap();
    let c = p.constants;
    let g = gamma_sphere(SphereModel::Gpsl, 1.0, &s, &p, None).unwrap();
    assert_eq!(g.rate, p.gamma * s.mass / c.m0);
    let g = gamma_sphere(SphereModel::Gpsl, 3.0, &s, &p, None).unwrap();
    assert_eq!(g.rate, p.gamma * s.mass / c.m0);
    let dp = gamma_sphere(SphereModel::TdDp, 2.0, &s, &p, None).unwrap();
    let want = 2.0 * c.g * s.mass * s.mass / (c.hbar * s.radius) * DP_PREFACTOR * (2.4 - 0.5);
    assert!((dp.rate / want - 1.0).abs() < 1e-14);
    assert!(matches!(gamma_sphere(SphereModel::TdCsl, 0.5, &s, &p, None), Err(Error::Config(_))));
    let td = TDParams::new(1e-30).unwrap();
    let csl = gamma_sphere(SphereModel::TdCsl, 0.5, &s, &p, Some(&td)).unwrap();
    assert!(csl.rate > 0.0);
    assert_eq!(gamma_sphere(SphereModel::Gpsl, 0.0, &s, &p, None).unwrap().rate, 0.0);
}

#[test]
fn sphere_validity_guard() {
    let p = si();
    let small = SphereSpec::from_density(2000.0, 1e-6).unwrap();
    assert!(matches!(gamma_sphere(SphereModel::Gpsl, 0.5, &small, &p, None), Err(Error::Validity(_))));
    let ok = SphereSpec::from_density(2000.0, 3e-6).unwrap();
    assert!(gamma_sphere(SphereModel::Gpsl, 0.5, &ok, &p, None).is_ok());
}

#[test]
fn balance_radius_order() {
    let b = balance_radius(100.0, &si()).unwrap();
    assert!(b.scaling > 1e-4 / 3.0 && b.scaling < 3e-4, "{}", b.scaling);
    assert!(b.exact > 1e-4 / 3.0 && b.exact < 3e-4, "{}", b.exact);
    let s = SphereSpec::from_density(100.0, b.exact).unwrap();
    assert!((s.r_m(&si()) / b.exact - 1.0).abs() < 1e-12);
}

#[test]
fn density_profile_shape() {
    let v = 1.0;
    let inside = density_profile(10.0, 1.0, v, 1.0);
    let edge = density_profile(0.0, 1.0, v, 1.0);
    assert!((inside - 1.0).abs() < 1e-12);
    assert!((edge - 0.5).abs() < 1e-15);
}

proptest! {
    #[test]
    fn dp_monotone(x in 0.0f64..20.0, h in 1e-6f64..1.0) {
        prop_assert!(k_g_dp(x + h) >= k_g_dp(x));
    }

    #[test]
    fn kernels_nonnegative(x in 0.0f64..20.0) {
        prop_assert!(k_g_dp(x) >= 0.0);
        prop_assert!(k_g_csl(x) >= 0.0);
        prop_assert!(k_g_gpsl(x) >= 0.0);
        prop_assert!(k_g_gpsl_integral(x) >= 0.0);
        prop_assert!((0.0..=1.0).contains(&k_c(x)));
    }

    #[test]
    fn csl_unbounded_linear(x in 2.0f64..1e6) {
        prop_assert!(k_g_csl(x) >= PI * x - 36.0 * PI / 70.0);
    }
}
