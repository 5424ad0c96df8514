//! Physical constants, smearing kernels and the special functions they need.

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};
use std::f64::consts::{PI, SQRT_2};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
/// √(2/π)
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub g: f64,
    pub hbar: f64,
    pub m0: f64,
}

impl PhysicalConstants {
    /// CODATA 2018 values in SI units; m0 is the proton mass.
    pub const fn codata() -> Self {
        Self {
            g: 6.674_30e-11,
            hbar: 1.054_571_817e-34,
            m0: 1.672_621_923_69e-27,
        }
    }

    pub const fn unit() -> Self {
        Self {
            g: 1.0,
            hbar: 1.0,
            m0: 1.0,
        }
    }

    pub fn new(g: f64, hbar: f64, m0: f64) -> Result<Self> {
        for (name, v) in [("G", g), ("hbar", hbar), ("m0", m0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { g, hbar, m0 })
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::unit()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub r_c: f64,
    pub constants: PhysicalConstants,
}

impl ModelParams {
    pub fn new(gamma: f64, r_c: f64, constants: PhysicalConstants) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
        }
        if !(r_c.is_finite() && r_c > 0.0) {
            return Err(Error::Domain(format!("r_C must be positive, got {r_c}")));
        }
        Ok(Self {
            gamma,
            r_c,
            constants,
        })
    }

    /// G = ħ = m0 = γ = r_C = 1.
    pub const fn unit() -> Self {
        Self {
            gamma: 1.0,
            r_c: 1.0,
            constants: PhysicalConstants::unit(),
        }
    }

    /// Feedback length G m0 m / (γ ħ) of a body of mass `m`.
    pub fn feedback_length(&self, m: f64) -> f64 {
        let c = &self.constants;
        c.g * c.m0 * m / (self.gamma * c.hbar)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::unit()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec {
    pub mass: f64,
}

impl ParticleSpec {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { mass })
    }

    /// r_p = G m0 m / (γ ħ), always derived from the current params.
    pub fn r_p(&self, params: &ModelParams) -> f64 {
        params.feedback_length(self.mass)
    }

    /// Mass giving r_p / r_C = `ratio`.
    pub fn with_rp_ratio(ratio: f64, params: &ModelParams) -> Result<Self> {
        let c = &params.constants;
        Self::new(ratio * params.r_c * params.gamma * c.hbar / (c.g * c.m0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TDParams {
    pub gamma_csl: f64,
}

impl TDParams {
    pub fn new(gamma_csl: f64) -> Result<Self> {
        if !(gamma_csl.is_finite() && gamma_csl > 0.0) {
            return Err(Error::Domain(format!(
                "gamma_csl must be positive, got {gamma_csl}"
            )));
        }
        Ok(Self { gamma_csl })
    }
}

/// Normalized Gaussian (2π r_C²)^{-3/2} exp(-r²/(2 r_C²)) at radius `r`.
pub fn gaussian_smear(r: f64, r_c: f64) -> Result<f64> {
    if !r.is_finite() || !r_c.is_finite() {
        return Err(Error::Domain("non-finite input to gaussian_smear".into()));
    }
    if r_c <= 0.0 {
        return Err(Error::Domain(format!("r_C must be positive, got {r_c}")));
    }
    Ok(gauss_r2(r * r, r_c))
}

pub fn gaussian_smear3(x: &Vec3, r_c: f64) -> Result<f64> {
    if !vec3::is_finite(x) {
        return Err(Error::Domain("non-finite input to gaussian_smear".into()));
    }
    gaussian_smear(vec3::norm(x), r_c)
}

/// Unchecked Gaussian from the squared radius.
#[inline]
pub fn gauss_r2(r2: f64, r_c: f64) -> f64 {
    let s2 = r_c * r_c;
    (2.0 * PI * s2).powf(-1.5) * (-r2 / (2.0 * s2)).exp()
}

/// f(x) = erf(x/(r_C√2))/x with f(0) = √(2/π)/r_C.
#[inline]
pub fn erf_kernel_f(x: f64, r_c: f64) -> f64 {
    let x = x.abs();
    if x < 1e-6 * r_c {
        let u = x / r_c;
        return SQRT_2_OVER_PI / r_c * (1.0 - u * u / 6.0);
    }
    erf(x / (r_c * SQRT_2)) / x
}

/// V = -G m0 m f(|q - x|).
pub fn feedback_potential(q_minus_x: f64, mass: f64, params: &ModelParams) -> f64 {
    let c = &params.constants;
    -c.g * c.m0 * mass * erf_kernel_f(q_minus_x, params.r_c)
}

pub fn feedback_potential3(q: &Vec3, x: &Vec3, mass: f64, params: &ModelParams) -> f64 {
    feedback_potential(vec3::dist(q, x), mass, params)
}

const ERF_SERIES_MAX: f64 = 2.5;

/// Error function, absolute error below 1e-14 everywhere.
pub fn erf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let a = z.abs();
    let v = if a < ERF_SERIES_MAX {
        erf_series(a)
    } else if a > 6.0 {
        1.0
    } else {
        1.0 - erfc_cf(a)
    };
    v.copysign(z)
}

/// Complementary error function.
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= ERFC_CF_MIN {
        erfc_cf(z)
    } else if z <= -ERFC_CF_MIN {
        2.0 - erfc_cf(-z)
    } else {
        1.0 - erf_series(z.abs()).copysign(z)
    }
}

// erf(z) = (2/√π) e^{-z²} Σ z (2z²)^n / (2n+1)!!; every term is positive.
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term > 1e-17 * sum {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * (-z2).exp() * sum
}

// 1 - erf loses about log10(1/erfc) digits, so the continued fraction takes over earlier
const ERFC_CF_MIN: f64 = 1.5;

// Continued fraction erfc(z) = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))),
// modified Lentz. Valid for z > 0, used for z ≥ 1.5.
fn erfc_cf(z: f64) -> f64 {
    if z > 27.3 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for n in 1..1000 {
        let an = n as f64 * 0.5;
        d = z + an * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = z + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z * z).exp() / (f * PI.sqrt())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Inverse standard normal CDF on (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // one Halley step
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

const I0_SERIES_MAX: f64 = 25.0;

/// Modified Bessel function I0, relative error below 1e-12.
///
/// Returns [`Error::Overflow`] once the result no longer fits in an f64
/// (z ≳ 713.98).
pub fn bessel_i0(z: f64) -> Result<f64> {
    if !(z >= 0.0) || z.is_infinite() {
        if z == f64::INFINITY {
            return Err(Error::Overflow("I0(+inf)".into()));
        }
        return Err(Error::Domain(format!("bessel_i0 needs z >= 0, got {z}")));
    }
    if z <= I0_SERIES_MAX {
        return Ok(i0_series(z));
    }
    let v = (z - 0.5 * (2.0 * PI * z).ln()).exp() * i0_asymptotic_sum(z);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("I0({z}) exceeds f64 range")))
    }
}

/// Exponentially scaled e^{-|z|} I0(z); never overflows.
pub fn bessel_i0e(z: f64) -> f64 {
    let z = z.abs();
    if z <= I0_SERIES_MAX {
        (-z).exp() * i0_series(z)
    } else {
        i0_asymptotic_sum(z) / (2.0 * PI * z).sqrt()
    }
}

fn i0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
    }
}

// Σ ((2k-1)!!)² / (k! 8^k z^k), truncated at the first term below 1e-17.
fn i0_asymptotic_sum(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        let t = (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * z);
        if t >= 1.0 {
            return sum;
        }
        term *= t;
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
    }
}
