//! Single-particle decoherence rates Γ(d̃) for GPSL, TD-CSL and TD-DP.

use crate::error::{Error, Result};
use crate::kernels::{bessel_i0e, erf, erf_kernel_f, gauss_r2, ModelParams, ParticleSpec, TDParams};
use crate::quadrature::{derive_seed, integrate_nd_mc, Axis, Component, IntegralResult, Mixture3, ProductSampler, QuadratureConfig};
use crate::vec3::{self, Vec3};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    GpslExact,
    GpslPerturbative,
    TdCsl,
    TdDp,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::GpslExact => "gpsl_exact",
            Model::GpslPerturbative => "gpsl_perturbative",
            Model::TdCsl => "td_csl",
            Model::TdDp => "td_dp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherencePoint {
    pub d_tilde: f64,
    pub rate: f64,
    pub error: f64,
    pub model: Model,
    pub converged: bool,
    pub warning: Option<String>,
}

impl DecoherencePoint {
    fn closed(d_tilde: f64, rate: f64, model: Model) -> Self {
        Self {
            d_tilde,
            rate,
            error: 0.0,
            model,
            converged: true,
            warning: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceCurve {
    pub model: Model,
    pub points: Vec<DecoherencePoint>,
    pub params: ModelParams,
}

impl DecoherenceCurve {
    pub fn new(model: Model, points: Vec<DecoherencePoint>, params: ModelParams) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].d_tilde > w[0].d_tilde)) {
            return Err(Error::Domain("curve points must have increasing d_tilde".into()));
        }
        if points.iter().any(|p| p.model != model) {
            return Err(Error::Domain("curve mixes models".into()));
        }
        Ok(Self {
            model,
            points,
            params,
        })
    }
}

fn check_d(d_tilde: f64) -> Result<()> {
    if d_tilde.is_finite() && d_tilde >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("d_tilde must be finite and >= 0, got {d_tilde}")))
    }
}

/// Collapse-only factor 1 - e^{-d̃²/2}.
pub fn collapse_factor(d_tilde: f64) -> f64 {
    -(-0.5 * d_tilde * d_tilde).exp_m1()
}

/// E_z[1 - cos(r_p Δf)] for z ~ N(midpoint, r_C²), times γ m_p/m0 e^{-d̃²/2}:
/// the gravitational part of the exact GPSL rate.
pub fn gpsl_gravity_part(
    d_tilde: f64,
    particle: &ParticleSpec,
    params: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_d(d_tilde)?;
    let base = params.gamma * particle.mass / params.constants.m0;
    let w = (-0.5 * d_tilde * d_tilde).exp();
    let r_p = particle.r_p(params);
    if d_tilde == 0.0 || w == 0.0 || r_p == 0.0 {
        return Ok(IntegralResult::exact(0.0));
    }
    let r_c = params.r_c;
    let x: Vec3 = [0.0, 0.0, d_tilde * r_c];
    let y: Vec3 = [0.0, 0.0, -d_tilde * r_c];
    let sampler = ProductSampler::normal3(&[0.0; 3], r_c);
    let res = integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            let df = erf_kernel_f(vec3::dist(&x, &z), r_c) - erf_kernel_f(vec3::dist(&y, &z), r_c);
            let s = (0.5 * r_p * df).sin();
            gauss_r2(vec3::norm2(&z), r_c) * 2.0 * s * s
        },
        &sampler,
        cfg,
    )?;
    Ok(res.scaled(base * w))
}

/// Γ = (γ m_p/m0)[1 - ∫ cos(r_p[f(x-z) - f(y-z)]) √(g(x-z) g(y-z)) d³z], by 3D MC.
///
/// The overlap factor is split off exactly, so d̃ = 0 gives 0 and large d̃ gives
/// γ m_p/m0 without sampling noise.
pub fn gamma_gpsl_exact(
    d_tilde: f64,
    particle: &ParticleSpec,
    params: &ModelParams,
    cfg: &QuadratureConfig,
) -> Result<DecoherencePoint> {
    check_d(d_tilde)?;
    let base = params.gamma * particle.mass / params.constants.m0;
    let grav = gpsl_gravity_part(d_tilde, particle, params, cfg)?;
    let warning = (particle.r_p(params) > 0.1 * params.r_c)
        .then(|| "r_p > 0.1 r_C: density may be outside the perturbative regime".to_string());
    Ok(DecoherencePoint {
        d_tilde,
        rate: base * collapse_factor(d_tilde) + grav.value,
        error: grav.error_estimate,
        model: Model::GpslExact,
        converged: grav.converged,
        warning,
    })
}

/// Stratified-MC sampler for the reduced 4D F̃ integral:
/// θ_k, θ_v uniform on [0, π], k, v half-normal.
pub fn f_tilde_sampler() -> ProductSampler {
    ProductSampler(vec![
        Axis::Uniform { lo: 0.0, hi: PI },
        Axis::Uniform { lo: 0.0, hi: PI },
        Axis::HalfNormal { sd: 1.0 },
        Axis::HalfNormal { sd: 1.0 },
    ])
}

/// Integrand of F̃(d̃) at (θ_k, θ_v, k, v), with e^{-A} I0(B) taken as e^{B-A} Ī0(B).
#[inline]
pub fn f_tilde_integrand(d_tilde: f64, x: &[f64]) -> f64 {
    let (tk, tv, k, v) = (x[0], x[1], x[2], x[3]);
    let (sk, ck) = tk.sin_cos();
    let (sv, cv) = tv.sin_cos();
    let a = k * k + v * v - k * v * ck * cv;
    let b = k * v * sk * sv;
    4.0 * PI * PI
        * (b - a).exp()
        * bessel_i0e(b)
        * sk
        * sv
        * (d_tilde * k * ck).sin()
        * (d_tilde * v * cv).sin()
}

/// F̃(d̃) by stratified Monte Carlo over the reduced 4D form.
pub fn f_tilde(d_tilde: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    check_d(d_tilde)?;
    if d_tilde == 0.0 {
        return Ok(IntegralResult::exact(0.0));
    }
    integrate_nd_mc(|x| f_tilde_integrand(d_tilde, x), &f_tilde_sampler(), cfg)
}

/// F̃ sampled on a uniform grid starting at 0, cubic-interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct FTildeTable {
    pub step: f64,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

pub const F_TILDE_GRID_STEP: f64 = 0.05;
pub const F_TILDE_GRID_MAX: f64 = 6.0;

impl FTildeTable {
    /// Grid 0, 0.05, ..., 6 evaluated with per-point seeds derived from `cfg.seed`.
    pub fn compute(cfg: &QuadratureConfig) -> Result<Self> {
        Self::compute_grid(F_TILDE_GRID_STEP, F_TILDE_GRID_MAX, cfg)
    }

    pub fn compute_grid(step: f64, max: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let n = (max / step).round() as usize;
        let res: Vec<Result<IntegralResult>> = (0..=n)
            .into_par_iter()
            .map(|i| f_tilde(i as f64 * step, &cfg.with_seed(derive_seed(cfg.seed, i as u64))))
            .collect();
        let mut values = Vec::with_capacity(n + 1);
        let mut errors = Vec::with_capacity(n + 1);
        for r in res {
            let r = r?;
            values.push(r.value);
            errors.push(r.error_estimate);
        }
        Ok(Self {
            step,
            values,
            errors,
        })
    }

    pub fn from_values(step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 || !(step > 0.0) {
            return Err(Error::Config("table needs >= 4 values and a positive step".into()));
        }
        let errors = vec![0.0; values.len()];
        Ok(Self {
            step,
            values,
            errors,
        })
    }

    pub fn d_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    fn node(&self, v: &[f64], i: isize) -> f64 {
        // F̃ is even in d̃
        v[i.unsigned_abs()]
    }

    fn interp(&self, v: &[f64], d: f64) -> f64 {
        let d = d.abs();
        let last = self.values.len() - 1;
        let dmax = self.d_max();
        if d >= dmax {
            return v[last] * (dmax / d).powi(4);
        }
        let t = d / self.step;
        let i = (t.floor() as isize).clamp(0, last as isize - 2);
        let s = t - i as f64;
        let (p0, p1, p2, p3) = (
            self.node(v, i - 1),
            self.node(v, i),
            self.node(v, i + 1),
            self.node(v, i + 2),
        );
        // Lagrange on nodes -1, 0, 1, 2
        -s * (s - 1.0) * (s - 2.0) / 6.0 * p0 + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * p1
            - (s + 1.0) * s * (s - 2.0) / 2.0 * p2
            + (s + 1.0) * s * (s - 1.0) / 6.0 * p3
    }

    pub fn interpolate(&self, d: f64) -> f64 {
        self.interp(&self.values, d)
    }

    pub fn interpolate_error(&self, d: f64) -> f64 {
        self.interp(&self.errors, d).abs()
    }
}

pub enum FTildeSource<'a> {
    Table(&'a FTildeTable),
    Direct(QuadratureConfig),
}

/// Γ = γ(m_p/m0)[1 - e^{-d̃²/2} + (r_p/r_C)² e^{-d̃²/2} F̃(d̃)/(2π⁴)].
pub fn gamma_gpsl_perturbative(
    d_tilde: f64,
    particle: &ParticleSpec,
    params: &ModelParams,
    source: FTildeSource<'_>,
) -> Result<DecoherencePoint> {
    check_d(d_tilde)?;
    let ratio = particle.r_p(params) / params.r_c;
    if ratio > 0.1 {
        return Err(Error::Validity(format!(
            "perturbative expansion needs r_p/r_C <= 0.1 (max feedback phase r_p·√(2/π)/r_C small), got {ratio}"
        )));
    }
    let base = params.gamma * particle.mass / params.constants.m0;
    let (ft, fe, converged) = match source {
        FTildeSource::Table(t) => (t.interpolate(d_tilde), t.interpolate_error(d_tilde), true),
        FTildeSource::Direct(cfg) => {
            let r = f_tilde(d_tilde, &cfg)?;
            (r.value, r.error_estimate, r.converged)
        }
    };
    let w = (-0.5 * d_tilde * d_tilde).exp();
    let k = base * ratio * ratio * w / (2.0 * PI.powi(4));
    Ok(DecoherencePoint {
        d_tilde,
        rate: base * collapse_factor(d_tilde) + k * ft,
        error: k * fe,
        model: Model::GpslPerturbative,
        converged,
        warning: None,
    })
}

/// 1 - (√π/(2d̃)) erf(d̃), series below d̃ = 1e-4.
pub fn dp_bracket(d: f64) -> f64 {
    if d < 1e-4 {
        let d2 = d * d;
        return d2 / 3.0 - d2 * d2 / 10.0;
    }
    1.0 - PI.sqrt() / (2.0 * d) * erf(d)
}

/// 2√2 π G m_p² / (ħ r_C).
pub fn dp_plateau(particle: &ParticleSpec, params: &ModelParams) -> f64 {
    let c = &params.constants;
    2.0 * std::f64::consts::SQRT_2 * PI * c.g * particle.mass * particle.mass / (c.hbar * params.r_c)
}

pub fn gamma_td_dp(d_tilde: f64, particle: &ParticleSpec, params: &ModelParams) -> Result<DecoherencePoint> {
    check_d(d_tilde)?;
    Ok(DecoherencePoint::closed(
        d_tilde,
        dp_plateau(particle, params) * dp_bracket(d_tilde),
        Model::TdDp,
    ))
}

/// (d̃ + 1/(2d̃)) erf(d̃) - (2 - e^{-d̃²})/√π, series below d̃ = 1e-4.
pub fn csl_h(d: f64) -> f64 {
    let sp = PI.sqrt();
    if d < 1e-4 {
        let d2 = d * d;
        return (2.0 / 3.0 * d2 - d2 * d2 / 15.0) / sp;
    }
    (d + 0.5 / d) * erf(d) - (2.0 - (-d * d).exp()) / sp
}

/// (collapse part, gravitational part) of the TD-CSL rate.
pub fn td_csl_parts(d_tilde: f64, particle: &ParticleSpec, params: &ModelParams, td: &TDParams) -> Result<(f64, f64)> {
    check_d(d_tilde)?;
    let c = &params.constants;
    let r_c = params.r_c;
    let mr = particle.mass / c.m0;
    let collapse = td.gamma_csl * (4.0 * PI * r_c * r_c).powf(-1.5) * mr * mr * -(-d_tilde * d_tilde).exp_m1();
    let gm = c.m0 * particle.mass * c.g / c.hbar;
    let grav = PI * r_c / td.gamma_csl * gm * gm * csl_h(d_tilde);
    Ok((collapse, grav))
}

pub fn gamma_td_csl(
    d_tilde: f64,
    particle: &ParticleSpec,
    params: &ModelParams,
    td: &TDParams,
) -> Result<DecoherencePoint> {
    let (a, b) = td_csl_parts(d_tilde, particle, params, td)?;
    Ok(DecoherencePoint::closed(d_tilde, a + b, Model::TdCsl))
}

/// ∫ [1/|z| - 1/|z + D|]² d³z by MC; equals 4π|D|.
pub fn coulomb_difference_norm(d: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("|D| must be positive, got {d}")));
    }
    let dv: Vec3 = [0.0, 0.0, d];
    let sampler = Mixture3::new(vec![
        (1.0, Component::Coulomb { center: [0.0; 3], a: d }),
        (1.0, Component::Coulomb { center: vec3::scale(&dv, -1.0), a: d }),
    ])?;
    integrate_nd_mc(
        |x| {
            let z = [x[0], x[1], x[2]];
            let a = 1.0 / vec3::norm(&z) - 1.0 / vec3::norm(&vec3::add(&z, &dv));
            a * a
        },
        &sampler,
        cfg,
    )
}

/// Difference of the two self-interaction integrals
/// ∫√(g(z)g(z+d)) f(|z|) - ∫√(g(z)g(z-d)) f(|z|), unit-free (r_C = 1), |d| = 2d̃.
///
/// Both terms are written as Gaussian expectations about the shifted centers and
/// share the same normal draws.
pub fn self_interaction_null_check(d_tilde: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    check_d(d_tilde)?;
    let a: Vec3 = [0.0, 0.0, d_tilde];
    let w = (-0.5 * d_tilde * d_tilde).exp();
    let sampler = ProductSampler::normal3(&[0.0; 3], 1.0);
    let res = integrate_nd_mc(
        |z| {
            let z = [z[0], z[1], z[2]];
            let g = gauss_r2(vec3::norm2(&z), 1.0);
            g * (erf_kernel_f(vec3::dist(&z, &a), 1.0) - erf_kernel_f(vec3::norm(&vec3::add(&z, &a)), 1.0))
        },
        &sampler,
        cfg,
    )?;
    Ok(res.scaled(w))
}
