//! Covariance of the classical Newtonian field sourced by the collapse noise.

use crate::error::{Error, Result};
use crate::kernels::{gauss_r2, PhysicalConstants, ModelParams};
use crate::quadrature::{integrate_nd_mc, Component, Mixture3, QuadratureConfig};
use crate::vec3::{self, Vec3};

/// Expected mass distribution. Point masses are smeared with the collapse
/// Gaussian; Gaussian components of width σ become width √(σ² + r_C²).
#[derive(Debug, Clone, PartialEq)]
pub enum MassDensityField {
    PointMasses(Vec<(f64, Vec3)>),
    /// (mass, center, σ)
    GaussianMixture(Vec<(f64, Vec3, f64)>),
}

impl MassDensityField {
    pub fn empty() -> Self {
        Self::PointMasses(Vec::new())
    }

    fn components(&self) -> Vec<(f64, Vec3, f64)> {
        match self {
            Self::PointMasses(v) => v.iter().map(|&(m, c)| (m, c, 0.0)).collect(),
            Self::GaussianMixture(v) => v.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (m, c, s) in self.components() {
            if !(m >= 0.0 && m.is_finite() && s >= 0.0 && s.is_finite() && vec3::is_finite(&c)) {
                return Err(Error::Domain("density components need m >= 0, σ >= 0, finite centers".into()));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.components().iter().map(|c| c.0).sum()
    }

    /// Smeared expectation ⟨μ_rC⟩(z).
    pub fn smeared(&self, z: &Vec3, r_c: f64) -> f64 {
        self.components()
            .iter()
            .map(|&(m, c, s)| m * gauss_r2(vec3::norm2(&vec3::sub(z, &c)), (s * s + r_c * r_c).sqrt()))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceResult {
    Finite { value: f64, error: f64 },
    Divergent { reason: String },
}

impl CovarianceResult {
    pub fn is_divergent(&self) -> bool {
        matches!(self, Self::Divergent { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite { value, .. } => Some(*value),
            Self::Divergent { .. } => None,
        }
    }
}

fn ordered(x: Vec3, y: Vec3) -> (Vec3, Vec3) {
    if x.partial_cmp(&y) == Some(std::cmp::Ordering::Greater) {
        (y, x)
    } else {
        (x, y)
    }
}

/// (m0 G²/γ) ∫ ⟨μ_rC⟩(z) / (|x − z||y − z|) d³z, by Monte Carlo.
pub fn gpsl_field_covariance(
    x: &Vec3,
    y: &Vec3,
    density: &MassDensityField,
    params: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<CovarianceResult> {
    density.validate()?;
    if !(vec3::is_finite(x) && vec3::is_finite(y)) {
        return Err(Error::Domain("field points must be finite".into()));
    }
    let total = density.total_mass();
    if total == 0.0 {
        return Ok(CovarianceResult::Finite { value: 0.0, error: 0.0 });
    }
    let (x, y) = ordered(*x, *y);
    let r_c = params.r_c;
    let comps = density.components();
    let mut mix: Vec<(f64, Component)> = comps
        .iter()
        .filter(|c| c.0 > 0.0)
        .map(|&(m, c, s)| {
            (0.5 * m / total, Component::Gaussian { center: c, sd: (s * s + r_c * r_c).sqrt() })
        })
        .collect();
    mix.push((0.25, Component::Coulomb { center: x, a: r_c }));
    mix.push((0.25, Component::Coulomb { center: y, a: r_c }));
    let sampler = Mixture3::new(mix)?;
    let r = integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            let rx = vec3::dist(&x, &z);
            let ry = vec3::dist(&y, &z);
            if rx == 0.0 || ry == 0.0 {
                return 0.0;
            }
            density.smeared(&z, r_c) / (rx * ry)
        },
        &sampler,
        cfg,
    )?;
    let c = &params.constants;
    let pre = c.m0 * c.g * c.g / params.gamma;
    Ok(CovarianceResult::Finite {
        value: pre * r.value,
        error: pre * r.error_estimate,
    })
}

/// ħG/(2|x − y|); the variance (x = y) diverges.
pub fn td_dp_covariance(x: &Vec3, y: &Vec3, constants: &PhysicalConstants) -> CovarianceResult {
    let d = vec3::dist(x, y);
    if d == 0.0 {
        return CovarianceResult::Divergent {
            reason: "TD-DP variance: ħG/(2|x - y|) at x = y".into(),
        };
    }
    CovarianceResult::Finite {
        value: constants.hbar * constants.g / (2.0 * d),
        error: 0.0,
    }
}

/// The V∘V composition diverges at large |z| for every pair of points.
pub fn td_csl_covariance(_x: &Vec3, _y: &Vec3) -> CovarianceResult {
    CovarianceResult::Divergent {
        reason: "TD-CSL: ∫ d³z /(|x - z||y - z|) diverges at large |z|".into(),
    }
}
