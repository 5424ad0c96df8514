//! Decoherence kernels of a homogeneous rigid sphere (sharp-wall density) and
//! brute-force Monte Carlo evaluations of their defining integrals.

use crate::error::{Error, Result};
use crate::kernels::{erf, ModelParams, TDParams};
use crate::quadrature::{integrate_nd_mc, Axis, Component, IntegralResult, Mixture3, ProductSampler, QuadratureConfig};
use crate::single_particle::{DecoherencePoint, Model};
use crate::vec3::{self, Vec3};
use std::f64::consts::{PI, SQRT_2};

/// π^{3/2}/(2√2), the prefactor of the closed-form DP kernel.
pub const DP_PREFACTOR: f64 = 1.968_701_243_215_302_5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub mass: f64,
    pub radius: f64,
}

impl SphereSpec {
    pub fn new(mass: f64, radius: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0 && radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!(
                "sphere needs positive mass and radius, got M = {mass}, R = {radius}"
            )));
        }
        Ok(Self { mass, radius })
    }

    pub fn from_density(mu0: f64, radius: f64) -> Result<Self> {
        Self::new(mu0 * 4.0 / 3.0 * PI * radius.powi(3), radius)
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius.powi(3)
    }

    pub fn mu0(&self) -> f64 {
        self.mass / self.volume()
    }

    /// R_M = G m0 M/(γ ħ).
    pub fn r_m(&self, params: &ModelParams) -> f64 {
        params.feedback_length(self.mass)
    }

    pub fn check_validity(&self, params: &ModelParams) -> Result<()> {
        if self.radius < 20.0 * params.r_c {
            return Err(Error::Validity(format!(
                "sphere kernels assume R >= 20 r_C, got R/r_C = {}",
                self.radius / params.r_c
            )));
        }
        Ok(())
    }
}

/// Overlap-volume fraction of two unit spheres at center distance 2x.
pub fn k_c(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        1.0 - 1.5 * x + 0.5 * x * x * x
    }
}

/// Closed form (x²/2)[(3+60x²)arccos x - x√(1-x²)(13+50x²)] for x < 1.
pub fn k_g_gpsl(x: f64) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    let x2 = x * x;
    0.5 * x2 * ((3.0 + 60.0 * x2) * x.acos() - x * (1.0 - x2).sqrt() * (13.0 + 50.0 * x2))
}

/// x²(1-x)⁴(4+x)/10: the lens integral (R²/2)V⁻³∫χ(z)χ(z+D)[P(z)-P(z+D)]²
/// done in closed form. Differs from [`k_g_gpsl`].
pub fn k_g_gpsl_integral(x: f64) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    x * x * (1.0 - x).powi(4) * (4.0 + x) / 10.0
}

fn dp_bracket(x: f64) -> f64 {
    if x < 1.0 {
        4.0 * x * x - 3.0 * x.powi(3) + 0.4 * x.powi(5)
    } else {
        2.4 - 1.0 / x
    }
}

/// Closed-form DP kernel with prefactor π^{3/2}/(2√2).
pub fn k_g_dp(x: f64) -> f64 {
    DP_PREFACTOR * dp_bracket(x)
}

/// DP kernel normalized so that Γ^DP = 2GM²/(ħR)·K reproduces the defining
/// integral, i.e. prefactor 1/4.
pub fn k_g_dp_integral(x: f64) -> f64 {
    0.25 * dp_bracket(x)
}

/// (π/70)[56x² - 28x⁴ + 14x⁵ - x⁷ | 70x - 36 + 7/x].
pub fn k_g_csl(x: f64) -> f64 {
    let p = if x < 1.0 {
        56.0 * x * x - 28.0 * x.powi(4) + 14.0 * x.powi(5) - x.powi(7)
    } else {
        70.0 * x - 36.0 + 7.0 / x
    };
    PI / 70.0 * p
}

/// F_Sp(x) = (1/π)[(3-x²)/6 | 1/(3x)].
pub fn f_sp(x: f64) -> f64 {
    if x < 1.0 {
        (3.0 - x * x) / (6.0 * PI)
    } else {
        1.0 / (3.0 * PI * x)
    }
}

/// Fourier transform of the radius-R ball indicator, √(2/π) k⁻³[sin kR - kR cos kR].
pub fn chi_tilde(k: f64, r: f64) -> f64 {
    let kr = k * r;
    if kr < 1e-3 {
        let q = kr * kr;
        return (2.0 / PI).sqrt() * r.powi(3) * (1.0 / 3.0 - q / 30.0);
    }
    (2.0 / PI).sqrt() * (kr.sin() - kr * kr.cos()) / k.powi(3)
}

/// Newtonian potential ∫χ_R(z')/|z-z'| d³z' of a unit-density ball at radius r.
pub fn ball_potential(r: f64, radius: f64) -> f64 {
    if r < radius {
        2.0 * PI * (radius * radius - r * r / 3.0)
    } else {
        4.0 * PI * radius.powi(3) / (3.0 * r)
    }
}

/// Smeared density of a body with sharp-wall profile blurred by r_C:
/// (M/V)[1/2 + erf(d/(r_C√2))/2] with d the signed distance to the surface.
pub fn density_profile(signed_depth: f64, mass: f64, volume: f64, r_c: f64) -> f64 {
    mass / volume * 0.5 * (1.0 + erf(signed_depth / (r_c * SQRT_2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereModel {
    Gpsl,
    TdCsl,
    TdDp,
}

/// Full center-of-mass decoherence rate of a sphere at D̃ = |D|/(2R).
pub fn gamma_sphere(
    model: SphereModel,
    d_tilde: f64,
    sphere: &SphereSpec,
    params: &ModelParams,
    td: Option<&TDParams>,
) -> Result<DecoherencePoint> {
    if !(d_tilde.is_finite() && d_tilde >= 0.0) {
        return Err(Error::Domain(format!("D_tilde must be >= 0, got {d_tilde}")));
    }
    sphere.check_validity(params)?;
    let c = &params.constants;
    let (m, r) = (sphere.mass, sphere.radius);
    let (rate, tag) = match model {
        SphereModel::Gpsl => {
            let q = sphere.r_m(params) / r;
            (
                params.gamma * m / c.m0 * (1.0 - k_c(d_tilde) + q * q * k_g_gpsl(d_tilde)),
                Model::GpslPerturbative,
            )
        }
        SphereModel::TdCsl => {
            let td = td.ok_or_else(|| Error::Config("TD-CSL needs gamma_csl".into()))?;
            let mr = m / c.m0;
            let collapse = 3.0 * td.gamma_csl / (4.0 * PI * r.powi(3)) * mr * mr * (1.0 - k_c(d_tilde));
            let gm = c.g * m * c.m0 / c.hbar;
            (collapse + r / td.gamma_csl * gm * gm * k_g_csl(d_tilde), Model::TdCsl)
        }
        SphereModel::TdDp => (2.0 * c.g * m * m / (c.hbar * r) * k_g_dp(d_tilde), Model::TdDp),
    };
    Ok(DecoherencePoint {
        d_tilde,
        rate,
        error: 0.0,
        model: tag,
        converged: true,
        warning: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceRadius {
    /// Radius solving R_M(R) = R with M = (4π/3)μ0 R³.
    pub exact: f64,
    /// Order-of-magnitude estimate √(γħ/(G m0 μ0)).
    pub scaling: f64,
}

pub fn balance_radius(mu0: f64, params: &ModelParams) -> Result<BalanceRadius> {
    if !(mu0 > 0.0 && mu0.is_finite()) {
        return Err(Error::Domain(format!("density must be positive, got {mu0}")));
    }
    let c = &params.constants;
    let scaling = (params.gamma * c.hbar / (c.g * c.m0 * mu0)).sqrt();
    Ok(BalanceRadius {
        exact: scaling * (3.0 / (4.0 * PI)).sqrt(),
        scaling,
    })
}

const UNIT_VOLUME: f64 = 4.0 / 3.0 * PI;

fn inside(z: &Vec3) -> bool {
    vec3::norm2(z) < 1.0
}

fn lens_sampler(x: f64) -> ProductSampler {
    let rho = (1.0 - x * x).max(0.0).sqrt();
    ProductSampler(vec![
        Axis::Uniform { lo: -rho, hi: rho },
        Axis::Uniform { lo: -rho, hi: rho },
        Axis::Uniform { lo: -1.0, hi: 1.0 - 2.0 * x },
    ])
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must be >= 0, got {x}")))
    }
}

/// MC estimate of the overlap fraction V⁻¹∫χ(z)χ(z+D), unit sphere, |D| = 2x.
pub fn k_c_mc(x: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    check_x(x)?;
    if x >= 1.0 {
        return Ok(IntegralResult::exact(0.0));
    }
    let d: Vec3 = [0.0, 0.0, 2.0 * x];
    let r = integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            f64::from(u8::from(inside(&z) && inside(&vec3::add(&z, &d))))
        },
        &lens_sampler(x),
        cfg,
    )?;
    Ok(r.scaled(1.0 / UNIT_VOLUME))
}

/// MC estimate of (R²/2)V⁻³∫χ(z)χ(z+D)[P(z)-P(z+D)]², unit sphere.
pub fn k_g_gpsl_mc(x: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    check_x(x)?;
    if x >= 1.0 {
        return Ok(IntegralResult::exact(0.0));
    }
    let d: Vec3 = [0.0, 0.0, 2.0 * x];
    let r = integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            let zd = vec3::add(&z, &d);
            if !(inside(&z) && inside(&zd)) {
                return 0.0;
            }
            let dp = ball_potential(vec3::norm(&z), 1.0) - ball_potential(vec3::norm(&zd), 1.0);
            dp * dp
        },
        &lens_sampler(x),
        cfg,
    )?;
    Ok(r.scaled(0.5 / UNIT_VOLUME.powi(3)))
}

/// MC estimate of (R/(2V²))∫χ(z)[P(z)-P(z+D)], unit sphere. Compare with
/// [`k_g_dp_integral`].
pub fn k_g_dp_mc(x: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    check_x(x)?;
    let d: Vec3 = [0.0, 0.0, 2.0 * x];
    let r = integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            if !inside(&z) {
                return 0.0;
            }
            ball_potential(vec3::norm(&z), 1.0) - ball_potential(vec3::norm(&vec3::add(&z, &d)), 1.0)
        },
        &ProductSampler::cube(3, -1.0, 1.0),
        cfg,
    )?;
    Ok(r.scaled(0.5 / (UNIT_VOLUME * UNIT_VOLUME)))
}

/// MC estimate of (1/(8R V²))∫_{ℝ³}[P(z)-P(z+D)]², unit sphere.
pub fn k_g_csl_mc(x: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    check_x(x)?;
    if x == 0.0 {
        return Ok(IntegralResult::exact(0.0));
    }
    let d: Vec3 = [0.0, 0.0, 2.0 * x];
    let sampler = Mixture3::new(vec![
        (1.0, Component::Coulomb { center: [0.0; 3], a: 1.0 }),
        (1.0, Component::Coulomb { center: vec3::scale(&d, -1.0), a: 1.0 }),
    ])?;
    let r = integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            let dp = ball_potential(vec3::norm(&z), 1.0) - ball_potential(vec3::norm(&vec3::add(&z, &d)), 1.0);
            dp * dp
        },
        &sampler,
        cfg,
    )?;
    Ok(r.scaled(1.0 / (8.0 * UNIT_VOLUME * UNIT_VOLUME)))
}

/// Difference ∫P(z)χ(z)χ(z+D) - ∫P(z)χ(z)χ(z-D) of the unitary-like term,
/// unit sphere, |D| = 2D̃; both terms use the same sample points.
pub fn unitary_term_sphere_check(d_tilde: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    check_x(d_tilde)?;
    let d: Vec3 = [0.0, 0.0, 2.0 * d_tilde];
    integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            if !inside(&z) {
                return 0.0;
            }
            let plus = f64::from(u8::from(inside(&vec3::add(&z, &d))));
            let minus = f64::from(u8::from(inside(&vec3::sub(&z, &d))));
            ball_potential(vec3::norm(&z), 1.0) * (plus - minus)
        },
        &ProductSampler::cube(3, -1.0, 1.0),
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefactor_constant() {
        assert!((DP_PREFACTOR - PI.powf(1.5) / (2.0 * SQRT_2)).abs() < 1e-15);
    }

    #[test]
    fn f_sp_matches_ball_potential() {
        for r in [0.0, 0.3, 0.99, 1.0, 1.7, 5.0] {
            let lhs = ball_potential(r, 1.0);
            let rhs = (2.0 * PI).powi(2) * f_sp(r);
            assert!((lhs - rhs).abs() < 1e-12 * lhs, "r = {r}");
        }
    }

    #[test]
    fn corrected_gpsl_form_small_x() {
        let x: f64 = 1e-4;
        assert!((k_g_gpsl_integral(x) / (x * x) - 0.4).abs() < 1e-3);
    }

    #[test]
    fn sphere_validity_guard() {
        let p = ModelParams::unit();
        let s = SphereSpec::new(1.0, 10.0).unwrap();
        assert!(matches!(
            gamma_sphere(SphereModel::Gpsl, 0.5, &s, &p, None),
            Err(Error::Validity(_))
        ));
        let s = SphereSpec::new(1.0, 20.0).unwrap();
        assert!(matches!(
            gamma_sphere(SphereModel::TdCsl, 0.5, &s, &p, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn density_profile_half_at_surface() {
        assert_eq!(density_profile(0.0, 2.0, 1.0, 1e-7), 1.0);
        assert!((density_profile(1e-5, 2.0, 1.0, 1e-7) - 2.0).abs() < 1e-14);
    }
}
