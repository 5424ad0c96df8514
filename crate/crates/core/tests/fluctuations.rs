use gpsl_core::fluctuations::*;
use gpsl_core::kernels::{gauss_r2, ModelParams, PhysicalConstants};
use gpsl_core::quadrature::{integrate_1d, Envelope, QuadratureConfig, Upper};
use proptest::prelude::*;
use std::f64::consts::PI;

fn mc(seed: u64) -> QuadratureConfig {
    QuadratureConfig::stratified(200_000, seed)
}

// ∫ g(z)/|x − z|² d³z for |x| = d: shell average of 1/|x − z|² is
// ln((s + d)/|s − d|)/(2 s d)
fn diagonal_oracle(d: f64) -> f64 {
    let f = |s: f64| {
        if s == 0.0 {
            return 4.0 * PI * s * s * gauss_r2(0.0, 1.0) / (d * d);
        }
        4.0 * PI * s * s * gauss_r2(s * s, 1.0) * ((s + d) / (s - d).abs()).ln() / (2.0 * s * d)
    };
    let cfg = QuadratureConfig::adaptive(1e-14, 1e-11);
    let a = integrate_1d(f, 0.0, d, &cfg).unwrap().value;
    let b = integrate_1d(f, d, Upper::Infinity(Envelope::Gaussian { width: 1.0 }), &cfg).unwrap().value;
    a + b
}

#[test]
fn empty_density_is_exact_zero() {
    let r = gpsl_field_covariance(&[0.0; 3], &[1.0, 0.0, 0.0], &MassDensityField::empty(), &ModelParams::unit(), &mc(1)).unwrap();
    assert_eq!(r, CovarianceResult::Finite { value: 0.0, error: 0.0 });
    let zero_mass = MassDensityField::PointMasses(vec![(0.0, [0.0; 3])]);
    let r = gpsl_field_covariance(&[0.0; 3], &[0.0; 3], &zero_mass, &ModelParams::unit(), &mc(1)).unwrap();
    assert_eq!(r.value(), Some(0.0));
}

#[test]
fn variance_near_point_mass_is_finite_and_matches_radial_quadrature() {
    let m = 2.0;
    let x = [0.0, 0.0, 5.0];
    let dens = MassDensityField::PointMasses(vec![(m, [0.0; 3])]);
    let r = gpsl_field_covariance(&x, &x, &dens, &ModelParams::unit(), &mc(2)).unwrap();
    let CovarianceResult::Finite { value, error } = r else { panic!("divergent") };
    assert!(value > 0.0 && value.is_finite());
    let want = m * diagonal_oracle(5.0);
    assert!((value - want).abs() < 4.0 * error, "{value} ± {error} vs {want}");
    assert!(error < 0.02 * value);
}

#[test]
fn variance_inside_the_mass_is_finite() {
    let dens = MassDensityField::PointMasses(vec![(1.0, [0.0; 3])]);
    let x = [0.0, 0.3, 0.0];
    let r = gpsl_field_covariance(&x, &x, &dens, &ModelParams::unit(), &mc(3)).unwrap();
    let CovarianceResult::Finite { value, error } = r else { panic!("divergent") };
    let want = diagonal_oracle(0.3);
    assert!((value - want).abs() < 4.0 * error, "{value} ± {error} vs {want}");
}

#[test]
fn gaussian_mixture_widens_smearing() {
    // a Gaussian packet of width σ is a point mass smeared over √(1 + σ²)
    let p = ModelParams::unit();
    let dens = MassDensityField::GaussianMixture(vec![(1.0, [0.0; 3], 0.0)]);
    let pts = MassDensityField::PointMasses(vec![(1.0, [0.0; 3])]);
    let x = [1.0, 2.0, 0.5];
    let y = [-1.0, 0.0, 2.0];
    assert_eq!(
        gpsl_field_covariance(&x, &y, &dens, &p, &mc(4)).unwrap(),
        gpsl_field_covariance(&x, &y, &pts, &p, &mc(4)).unwrap()
    );
    let wide = MassDensityField::GaussianMixture(vec![(1.0, [0.0; 3], 3.0)]);
    let a = gpsl_field_covariance(&[0.0; 3], &[0.0; 3], &pts, &p, &mc(5)).unwrap().value().unwrap();
    let b = gpsl_field_covariance(&[0.0; 3], &[0.0; 3], &wide, &p, &mc(5)).unwrap().value().unwrap();
    assert!(b < a);
}

#[test]
fn units_enter_through_the_prefactor() {
    let c = PhysicalConstants::new(2.0, 1.0, 3.0).unwrap();
    let p = ModelParams::new(5.0, 1.0, c).unwrap();
    let dens = MassDensityField::PointMasses(vec![(1.0, [0.0; 3])]);
    let x = [0.0, 0.0, 2.0];
    let a = gpsl_field_covariance(&x, &x, &dens, &p, &mc(6)).unwrap().value().unwrap();
    let b = gpsl_field_covariance(&x, &x, &dens, &ModelParams::unit(), &mc(6)).unwrap().value().unwrap();
    assert!((a / b - 3.0 * 4.0 / 5.0).abs() < 1e-12);
}

#[test]
fn td_dp_closed_form() {
    let c = PhysicalConstants::unit();
    assert_eq!(td_dp_covariance(&[0.0; 3], &[1.0, 0.0, 0.0], &c).value(), Some(0.5));
    assert!(td_dp_covariance(&[0.4; 3], &[0.4; 3], &c).is_divergent());
    let si = PhysicalConstants::codata();
    let v = td_dp_covariance(&[0.0; 3], &[0.0, 2.0, 0.0], &si).value().unwrap();
    assert!((v - si.hbar * si.g / 4.0).abs() <= 1e-12 * v);
    for d in [0.5, 1.0, 2.0, 8.0, 100.0] {
        let v = td_dp_covariance(&[0.0; 3], &[d, 0.0, 0.0], &c).value().unwrap();
        assert!((v * d - 0.5).abs() < 1e-12);
    }
}

#[test]
fn td_csl_always_divergent() {
    for (x, y) in [([0.0; 3], [0.0; 3]), ([0.0; 3], [1.0, 2.0, 3.0]), ([1.0, 2.0, 3.0], [0.0; 3])] {
        assert!(td_csl_covariance(&x, &y).is_divergent());
        assert_eq!(td_csl_covariance(&x, &y), td_csl_covariance(&y, &x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gpsl_covariance_symmetric(
        x in prop::array::uniform3(-4.0f64..4.0),
        y in prop::array::uniform3(-4.0f64..4.0),
        seed in 0u64..1000,
    ) {
        let dens = MassDensityField::PointMasses(vec![(1.0, [0.0; 3]), (0.5, [1.0, 1.0, 0.0])]);
        let cfg = QuadratureConfig::stratified(8_000, seed);
        let a = gpsl_field_covariance(&x, &y, &dens, &ModelParams::unit(), &cfg).unwrap();
        let b = gpsl_field_covariance(&y, &x, &dens, &ModelParams::unit(), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gpsl_covariance_linear_in_mass(scale in 0.1f64..50.0, seed in 0u64..1000) {
        let base = vec![(1.0, [0.0; 3]), (2.0, [0.0, 0.0, 3.0])];
        let scaled: Vec<_> = base.iter().map(|&(m, c)| (m * scale, c)).collect();
        let cfg = QuadratureConfig::stratified(8_000, seed);
        let x = [1.0, 0.0, 1.0];
        let y = [0.0, -2.0, 0.0];
        let p = ModelParams::unit();
        let a = gpsl_field_covariance(&x, &y, &MassDensityField::PointMasses(base), &p, &cfg).unwrap().value().unwrap();
        let b = gpsl_field_covariance(&x, &y, &MassDensityField::PointMasses(scaled), &p, &cfg).unwrap().value().unwrap();
        prop_assert!((b / (scale * a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn td_dp_symmetric(x in prop::array::uniform3(-4.0f64..4.0), y in prop::array::uniform3(-4.0f64..4.0)) {
        let c = PhysicalConstants::unit();
        prop_assert_eq!(td_dp_covariance(&x, &y, &c), td_dp_covariance(&y, &x, &c));
    }
}
