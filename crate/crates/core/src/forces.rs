//! Average impulse and force between two particles, and the smeared pair
//! potential recovered at perturbative order.

use crate::error::{Error, Result};
use crate::kernels::{erf, erf_kernel_f, gauss_r2, ModelParams, SQRT_2_OVER_PI};
use crate::quadrature::{
    derive_seed, integrate_1d, integrate_nd_mc, substream, Envelope, IntegralResult, ProductSampler,
    QuadratureConfig, Upper,
};
use crate::vec3::{self, Vec3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

/// Exact small-d_r slope of F̃_G, 1/(3√(2π)).
pub const F_TILDE_G_SLOPE: f64 = 0.132_980_760_133_810_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConfiguration {
    pub m_j: f64,
    pub m_k: f64,
    pub z_j: Vec3,
    pub z_k: Vec3,
}

impl PairConfiguration {
    pub fn new(m_j: f64, m_k: f64, z_j: Vec3, z_k: Vec3) -> Result<Self> {
        if !(m_j > 0.0 && m_k > 0.0 && m_j.is_finite() && m_k.is_finite()) {
            return Err(Error::Domain("pair masses must be positive".into()));
        }
        if !(vec3::is_finite(&z_j) && vec3::is_finite(&z_k)) {
            return Err(Error::Domain("pair positions must be finite".into()));
        }
        Ok(Self { m_j, m_k, z_j, z_k })
    }

    /// Same pair with the labels j and k exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            m_j: self.m_k,
            m_k: self.m_j,
            z_j: self.z_k,
            z_k: self.z_j,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceVector {
    pub components: Vec3,
    pub error: Vec3,
}

impl ForceVector {
    pub fn magnitude(&self) -> f64 {
        vec3::norm(&self.components)
    }
}

/// (y/|y|²)[f(|y|) - 4π r_C² g(y)].
pub fn impulse_kernel(y: &Vec3, r_c: f64) -> Vec3 {
    let r2 = vec3::norm2(y);
    let u2 = r2 / (2.0 * r_c * r_c);
    if u2 < 1e-4 {
        let s = SQRT_2_OVER_PI / r_c / (2.0 * r_c * r_c)
            * (2.0 / 3.0 + u2 * (-0.4 + u2 * (1.0 / 7.0 - u2 / 27.0)));
        return vec3::scale(y, s);
    }
    let r = r2.sqrt();
    let bracket = erf_kernel_f(r, r_c) - 4.0 * PI * r_c * r_c * gauss_r2(r2, r_c);
    vec3::scale(y, bracket / r2)
}

// e^{r²+d²} B1 = (1+s)e^{-s} - (1-s)e^{s} = 2Σ_{k≥1} 2k s^{2k+1}/(2k+1)!
fn b1(r: f64, d: f64) -> f64 {
    let s = 2.0 * r * d;
    if s < 0.5 {
        let s2 = s * s;
        let mut term = s * s2 / 6.0; // s³/3!
        let mut sum = 2.0 * term;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            k += 1.0;
            term *= s2 / ((2.0 * k) * (2.0 * k + 1.0));
            sum += 2.0 * k * term;
        }
        return 2.0 * (-r * r - d * d).exp() * sum;
    }
    (-(r - d) * (r - d)).exp() * (s - 1.0) + (-(r + d) * (r + d)).exp() * (s + 1.0)
}

// √π erf(r)/r - 2e^{-r²}
fn b2(r: f64) -> f64 {
    if r < 1e-2 {
        let q = r * r;
        return 2.0 * q * (2.0 / 3.0 + q * (-0.4 + q * (1.0 / 7.0 - q / 27.0)));
    }
    PI.sqrt() * erf(r) / r - 2.0 * (-r * r).exp()
}

/// F̃_G(d_r) = (1/(4π d_r²))∫₀^∞ (1/r) B1(r, d_r) B2(r) dr.
pub fn f_tilde_g(d_r: f64, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    if !(d_r.is_finite() && d_r >= 0.0) {
        return Err(Error::Domain(format!("d_r must be >= 0, got {d_r}")));
    }
    if d_r < 1e-6 {
        return Ok(IntegralResult::exact(F_TILDE_G_SLOPE * d_r));
    }
    let f = |r: f64| {
        if r == 0.0 {
            0.0
        } else {
            b1(r, d_r) * b2(r) / r
        }
    };
    let lo = (d_r - 8.0).max(0.0);
    let hi = d_r + 8.0;
    let mut parts = Vec::with_capacity(3);
    if lo > 0.0 {
        parts.push(integrate_1d(f, 0.0, lo, cfg)?);
    }
    parts.push(integrate_1d(f, lo, hi, cfg)?);
    parts.push(integrate_1d(f, hi, Upper::Infinity(Envelope::Gaussian { width: 1.0 }), cfg)?);
    let s = 1.0 / (4.0 * PI * d_r * d_r);
    Ok(IntegralResult {
        value: parts.iter().map(|p| p.value).sum::<f64>() * s,
        error_estimate: parts.iter().map(|p| p.error_estimate).sum::<f64>() * s,
        n_evals: parts.iter().map(|p| p.n_evals).sum(),
        converged: parts.iter().all(|p| p.converged),
    })
}

fn force_from_separation(d: &Vec3, m_j: f64, m_k: f64, params: &ModelParams, cfg: &QuadratureConfig) -> Result<(Vec3, f64)> {
    let r_c = params.r_c;
    let dist = vec3::norm(d);
    if dist == 0.0 {
        return Ok(([0.0; 3], 0.0));
    }
    let ft = f_tilde_g(dist / (r_c * SQRT_2), cfg)?;
    let mag = params.constants.g * m_j * m_k / (r_c * r_c);
    Ok((
        vec3::scale(d, mag * ft.value / dist),
        mag * ft.error_estimate,
    ))
}

/// Average force on particle k exerted by particle j for point-supported
/// positions: G m_j m_k F̃_G(|z_j - z_k|/(r_C√2))/r_C², directed from k to j.
pub fn average_force(pair: &PairConfiguration, params: &ModelParams, cfg: &QuadratureConfig) -> Result<ForceVector> {
    let d = vec3::sub(&pair.z_j, &pair.z_k);
    let (f, e) = force_from_separation(&d, pair.m_j, pair.m_k, params, cfg)?;
    let dist = vec3::norm(&d);
    let err = if dist > 0.0 {
        d.map(|c| (c / dist).abs() * e)
    } else {
        [0.0; 3]
    };
    Ok(ForceVector {
        components: f,
        error: err,
    })
}

/// One Gaussian component of a positional distribution: (weight, mean, sd).
pub type GaussianComponent = (f64, Vec3, f64);

/// Average force on k from j when each position follows a Gaussian mixture
/// (independent particles). The separation of every component pair is
/// Gaussian; its force average is done by 3D stratified MC.
pub fn average_force_mixture(
    m_j: f64,
    m_k: f64,
    pos_j: &[GaussianComponent],
    pos_k: &[GaussianComponent],
    params: &ModelParams,
    mc: &QuadratureConfig,
    inner: &QuadratureConfig,
) -> Result<ForceVector> {
    let wj: f64 = pos_j.iter().map(|c| c.0).sum();
    let wk: f64 = pos_k.iter().map(|c| c.0).sum();
    if pos_j.is_empty() || pos_k.is_empty() || !(wj > 0.0 && wk > 0.0) {
        return Err(Error::Domain("mixtures need positive total weight".into()));
    }
    let mut comp = [0.0; 3];
    let mut var = [0.0; 3];
    let mut idx = 0u64;
    for &(a, mu_a, sa) in pos_j {
        for &(b, mu_b, sb) in pos_k {
            let w = a * b / (wj * wk);
            let mean = vec3::sub(&mu_a, &mu_b);
            let sd = (sa * sa + sb * sb).sqrt();
            if sd == 0.0 {
                let (f, _) = force_from_separation(&mean, m_j, m_k, params, inner)?;
                for c in 0..3 {
                    comp[c] += w * f[c];
                }
                continue;
            }
            let sampler = ProductSampler::normal3(&mean, sd);
            for c in 0..3 {
                let cfg = mc.with_seed(derive_seed(mc.seed, idx));
                let r = integrate_nd_mc(
                    |x| {
                        let d = [x[0], x[1], x[2]];
                        let g = gauss_r2(vec3::norm2(&vec3::sub(&d, &mean)), sd);
                        match force_from_separation(&d, m_j, m_k, params, inner) {
                            Ok((f, _)) => g * f[c],
                            Err(_) => f64::NAN,
                        }
                    },
                    &sampler,
                    &cfg,
                )?;
                comp[c] += w * r.value;
                var[c] += (w * r.error_estimate).powi(2);
            }
            idx += 1;
        }
    }
    Ok(ForceVector {
        components: comp,
        error: var.map(f64::sqrt),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseEstimate {
    pub on_j: ForceVector,
    pub on_k: ForceVector,
    pub total: ForceVector,
    pub n_samples: u64,
}

const IMPULSE_BLOCK: u64 = 4096;

/// Monte Carlo mean impulse per collapse: a collapse center is drawn from the
/// mass-weighted Gaussian mixture, and each particle receives
/// (G m m0/γ) K(x_c - z).
pub fn mc_mean_impulse(pair: &PairConfiguration, n_samples: u64, seed: u64, params: &ModelParams) -> Result<ImpulseEstimate> {
    if n_samples < 10_000 {
        return Err(Error::Config(format!("mc_mean_impulse needs >= 1e4 samples, got {n_samples}")));
    }
    let c = &params.constants;
    let r_c = params.r_c;
    let total_mass = pair.m_j + pair.m_k;
    let p_j = pair.m_j / total_mass;
    let cj = c.g * pair.m_j * c.m0 / params.gamma;
    let ck = c.g * pair.m_k * c.m0 / params.gamma;
    let blocks = n_samples.div_ceil(IMPULSE_BLOCK);
    // per block: sums and sums of squares of [on_j, on_k, total] components
    let parts: Vec<[[f64; 9]; 2]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let mut s = [0.0; 9];
            let mut q = [0.0; 9];
            for _ in b * IMPULSE_BLOCK..((b + 1) * IMPULSE_BLOCK).min(n_samples) {
                let u: f64 = rng.random();
                let center = if u < p_j { pair.z_j } else { pair.z_k };
                let xc = [
                    center[0] + r_c * rng.sample::<f64, _>(StandardNormal),
                    center[1] + r_c * rng.sample::<f64, _>(StandardNormal),
                    center[2] + r_c * rng.sample::<f64, _>(StandardNormal),
                ];
                let jj = vec3::scale(&impulse_kernel(&vec3::sub(&xc, &pair.z_j), r_c), cj);
                let jk = vec3::scale(&impulse_kernel(&vec3::sub(&xc, &pair.z_k), r_c), ck);
                let tot = vec3::add(&jj, &jk);
                for (i, v) in jj.iter().chain(jk.iter()).chain(tot.iter()).enumerate() {
                    s[i] += v;
                    q[i] += v * v;
                }
            }
            [s, q]
        })
        .collect();
    let mut s = [0.0; 9];
    let mut q = [0.0; 9];
    for p in &parts {
        for i in 0..9 {
            s[i] += p[0][i];
            q[i] += p[1][i];
        }
    }
    let n = n_samples as f64;
    let mut mean = [0.0; 9];
    let mut se = [0.0; 9];
    for i in 0..9 {
        mean[i] = s[i] / n;
        se[i] = ((q[i] / n - mean[i] * mean[i]).max(0.0) / (n - 1.0)).sqrt();
    }
    let fv = |o: usize| ForceVector {
        components: [mean[o], mean[o + 1], mean[o + 2]],
        error: [se[o], se[o + 1], se[o + 2]],
    };
    Ok(ImpulseEstimate {
        on_j: fv(0),
        on_k: fv(3),
        total: fv(6),
        n_samples,
    })
}

/// ∫₀^t erf(τ/(√2 r_C)) dτ
fn erf_antiderivative(t: f64, r_c: f64) -> f64 {
    t * erf(t / (SQRT_2 * r_c)) + r_c * SQRT_2_OVER_PI * (-t * t / (2.0 * r_c * r_c)).exp()
}

/// Spherical average of f(|X + s n|) over directions n, with |X| = d.
fn shell_average_f(s: f64, d: f64, r_c: f64) -> f64 {
    if s < 1e-6 * r_c || d < 1e-6 * r_c {
        return erf_kernel_f(s.max(d), r_c);
    }
    (erf_antiderivative(s + d, r_c) - erf_antiderivative((s - d).abs(), r_c)) / (2.0 * s * d)
}

/// (1/m0)∫ V_p(x) M g(x - X) d³x for a particle of mass `m_p` at distance `d`
/// from a smeared source of mass `m_source`.
pub fn effective_pair_potential(d: f64, m_p: f64, m_source: f64, params: &ModelParams, cfg: &QuadratureConfig) -> Result<f64> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::Domain(format!("separation must be >= 0, got {d}")));
    }
    let r_c = params.r_c;
    let r = integrate_1d(
        |s| 4.0 * PI * s * s * gauss_r2(s * s, r_c) * shell_average_f(s, d, r_c),
        0.0,
        Upper::Infinity(Envelope::Gaussian { width: SQRT_2 * r_c }),
        cfg,
    )?;
    Ok(-params.constants.g * m_p * m_source * r.value)
}
