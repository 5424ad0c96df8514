//! Adaptive Gauss-Kronrod integration in 1D and seeded (stratified) Monte Carlo
//! in 2 to 6 dimensions.

use crate::error::{Error, Result};
use crate::kernels::inverse_normal_cdf;
use crate::vec3::{self, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Adaptive1d,
    PlainMc,
    StratifiedMc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: u64,
    pub seed: u64,
    pub strategy: Strategy,
}

impl QuadratureConfig {
    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_evals: 2_000_000,
            seed: 0,
            strategy: Strategy::Adaptive1d,
        }
    }

    pub fn stratified(max_evals: u64, seed: u64) -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: 1e-2,
            max_evals,
            seed,
            strategy: Strategy::StratifiedMc,
        }
    }

    pub fn plain(max_evals: u64, seed: u64) -> Self {
        Self {
            strategy: Strategy::PlainMc,
            ..Self::stratified(max_evals, seed)
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_evals == 0 {
            return Err(Error::Config("max_evals must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::adaptive(1e-12, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub n_evals: u64,
    pub converged: bool,
}

impl IntegralResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            n_evals: 0,
            converged: true,
        }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self {
            value: self.value * s,
            error_estimate: self.error_estimate * s.abs(),
            ..self
        }
    }
}

/// Declared decay of an integrand on [a, ∞), used to truncate the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// |f(x)| ≲ exp(-((x - a)/width)²)
    Gaussian { width: f64 },
    /// |f(x)| ≲ exp(-(x - a)/scale)
    Exponential { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    At(f64),
    Infinity(Envelope),
}

impl From<f64> for Upper {
    fn from(b: f64) -> Self {
        Upper::At(b)
    }
}

// ln(1e18)
const TAIL_LOG: f64 = 41.446_531_673_892_82;

impl Upper {
    fn resolve(self, a: f64) -> Result<f64> {
        match self {
            Upper::At(b) if b.is_finite() => Ok(b),
            Upper::At(_) => Err(Error::Domain(
                "infinite upper limit needs a declared decay envelope".into(),
            )),
            Upper::Infinity(Envelope::Gaussian { width }) if width > 0.0 => {
                Ok(a + width * TAIL_LOG.sqrt())
            }
            Upper::Infinity(Envelope::Exponential { scale }) if scale > 0.0 => {
                Ok(a + scale * TAIL_LOG)
            }
            Upper::Infinity(_) => Err(Error::Domain("envelope scale must be positive".into())),
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, bool) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut ok = fc.is_finite();
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        ok &= f1.is_finite() && f2.is_finite();
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err, ok)
}

/// Adaptive G7/K15 integration of `f` over [a, b].
///
/// The interval with the largest error estimate is bisected until the total
/// error meets the tolerance or `max_evals` is exhausted; in the latter case the
/// best estimate is returned with `converged = false`.
pub fn integrate_1d<F>(f: F, a: f64, b: impl Into<Upper>, cfg: &QuadratureConfig) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let b = b.into().resolve(a)?;
    if !(a.is_finite() && a < b) {
        if a == b {
            return Ok(IntegralResult::exact(0.0));
        }
        return Err(Error::Domain(format!("need a < b, got [{a}, {b}]")));
    }
    let (v, e, ok) = gk15(&f, a, b);
    let mut evals = 15u64;
    let mut bad = u64::from(!ok);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut total_err = e;
    let mut converged = total_err <= cfg.tolerance(total);
    while !converged && evals + 30 <= cfg.max_evals {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            heap.push(seg);
            break;
        }
        let (v1, e1, ok1) = gk15(&f, seg.a, mid);
        let (v2, e2, ok2) = gk15(&f, mid, seg.b);
        evals += 30;
        bad += u64::from(!ok1) + u64::from(!ok2);
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        if total_err <= cfg.tolerance(total) {
            (total, total_err) = ordered_sums(&heap);
            converged = total_err <= cfg.tolerance(total);
        }
    }
    (total, total_err) = ordered_sums(&heap);
    converged = converged || total_err <= cfg.tolerance(total);
    if bad > 0 {
        return Err(Error::BadIntegrand { bad, total: evals });
    }
    Ok(IntegralResult {
        value: total,
        error_estimate: total_err,
        n_evals: evals,
        converged,
    })
}

// Running sums drift; the reported values are re-summed left to right.
fn ordered_sums(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    (segs.iter().map(|s| s.value).sum(), segs.iter().map(|s| s.error).sum())
}

/// Maps points of the unit hypercube to the integration domain.
///
/// `map` writes the domain point into `x` and returns the weight 1/p(x), so that
/// the mean of f(x)·w over uniform `u` is the integral.
pub trait Sampler: Sync {
    /// Number of uniform variates consumed per sample.
    fn unit_dim(&self) -> usize;
    /// Dimension of the domain.
    fn dim(&self) -> usize;
    fn map(&self, u: &[f64], x: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    HalfNormal { sd: f64 },
}

impl Axis {
    fn map(&self, u: f64) -> (f64, f64) {
        match *self {
            Axis::Uniform { lo, hi } => (lo + (hi - lo) * u, hi - lo),
            Axis::Normal { mean, sd } => {
                let z = inverse_normal_cdf(u);
                (mean + sd * z, sd * (2.0 * PI).sqrt() * (0.5 * z * z).exp())
            }
            Axis::HalfNormal { sd } => {
                let z = inverse_normal_cdf(0.5 + 0.5 * u);
                (sd * z, sd * (0.5 * PI).sqrt() * (0.5 * z * z).exp())
            }
        }
    }
}

/// Independent axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSampler(pub Vec<Axis>);

impl ProductSampler {
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self(vec![Axis::Uniform { lo, hi }; n])
    }

    pub fn normal3(center: &Vec3, sd: f64) -> Self {
        Self(
            center
                .iter()
                .map(|&mean| Axis::Normal { mean, sd })
                .collect(),
        )
    }
}

impl Sampler for ProductSampler {
    fn unit_dim(&self) -> usize {
        self.0.len()
    }
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn map(&self, u: &[f64], x: &mut [f64]) -> f64 {
        let mut w = 1.0;
        for ((axis, &ui), xi) in self.0.iter().zip(u).zip(x.iter_mut()) {
            let (v, wi) = axis.map(ui);
            *xi = v;
            w *= wi;
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Gaussian { center: Vec3, sd: f64 },
    /// Radial density a/(r+a)² about `center`; 3D density ∝ 1/r² near the
    /// center, which cancels Coulomb-type singularities.
    Coulomb { center: Vec3, a: f64 },
}

impl Component {
    fn density(&self, x: &Vec3) -> f64 {
        match *self {
            Component::Gaussian { center, sd } => {
                crate::kernels::gauss_r2(vec3::norm2(&vec3::sub(x, &center)), sd)
            }
            Component::Coulomb { center, a } => {
                let r = vec3::dist(x, &center);
                if r == 0.0 {
                    return f64::INFINITY;
                }
                a / ((r + a) * (r + a) * 4.0 * PI * r * r)
            }
        }
    }

    fn draw(&self, u: &[f64]) -> Vec3 {
        match *self {
            Component::Gaussian { center, sd } => [
                center[0] + sd * inverse_normal_cdf(u[0]),
                center[1] + sd * inverse_normal_cdf(u[1]),
                center[2] + sd * inverse_normal_cdf(u[2]),
            ],
            Component::Coulomb { center, a } => {
                let r = a * u[0] / (1.0 - u[0]);
                let ct = 2.0 * u[1] - 1.0;
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                let phi = 2.0 * PI * u[2];
                [
                    center[0] + r * st * phi.cos(),
                    center[1] + r * st * phi.sin(),
                    center[2] + r * ct,
                ]
            }
        }
    }
}

/// Weighted mixture of 3D components; the first uniform picks the component.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture3 {
    components: Vec<(f64, Component)>,
    cumulative: Vec<f64>,
}

impl Mixture3 {
    pub fn new(components: Vec<(f64, Component)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("mixture needs at least one component".into()));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if !(total > 0.0) || components.iter().any(|c| !(c.0 >= 0.0)) {
            return Err(Error::Config("mixture weights must be nonnegative".into()));
        }
        let components: Vec<(f64, Component)> =
            components.into_iter().map(|(w, c)| (w / total, c)).collect();
        let mut acc = 0.0;
        let cumulative = components
            .iter()
            .map(|c| {
                acc += c.0;
                acc
            })
            .collect();
        Ok(Self {
            components,
            cumulative,
        })
    }

    pub fn density(&self, x: &Vec3) -> f64 {
        self.components.iter().map(|(w, c)| w * c.density(x)).sum()
    }
}

impl Sampler for Mixture3 {
    fn unit_dim(&self) -> usize {
        4
    }
    fn dim(&self) -> usize {
        3
    }
    fn map(&self, u: &[f64], x: &mut [f64]) -> f64 {
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u[0] < c)
            .unwrap_or(self.components.len() - 1);
        let p = self.components[idx].1.draw(&u[1..4]);
        x[..3].copy_from_slice(&p);
        let d = self.density(&p);
        if d > 0.0 && d.is_finite() {
            1.0 / d
        } else {
            0.0
        }
    }
}

/// Samples drawn per stratum.
pub const SAMPLES_PER_STRATUM: u64 = 4;
const BLOCK: u64 = 2048;

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    var: f64,
    sumsq: f64,
    n: u64,
    bad: u64,
}

/// Substream generator for (seed, index).
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Independent 64-bit seed for item `index` of a run seeded with `seed` (SplitMix64).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Strata per axis for a given budget and dimension.
pub fn strata_per_axis(max_evals: u64, unit_dim: usize) -> u64 {
    let cells = (max_evals / SAMPLES_PER_STRATUM).max(1) as f64;
    let mut m = cells.powf(1.0 / unit_dim as f64).floor() as u64;
    while (m + 1).pow(unit_dim as u32) as f64 <= cells {
        m += 1;
    }
    while m > 1 && m.pow(unit_dim as u32) as f64 > cells {
        m -= 1;
    }
    m.max(1)
}

/// Monte Carlo estimate of ∫ f(x) dx with `sampler` as the importance map.
///
/// Deterministic for a fixed seed regardless of the rayon pool size: every
/// stratum (or block of plain samples) draws from its own substream, and
/// per-block partial sums are combined in index order.
pub fn integrate_nd_mc<F, S>(f: F, sampler: &S, cfg: &QuadratureConfig) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: Sampler + ?Sized,
{
    cfg.validate()?;
    let n = sampler.unit_dim();
    if !(2..=6).contains(&sampler.dim()) || n > 8 {
        return Err(Error::Config(format!(
            "MC integration supports 2..=6 dimensions, got {}",
            sampler.dim()
        )));
    }
    let eval = |u: &[f64], x: &mut [f64]| -> Option<f64> {
        let w = sampler.map(u, x);
        if w == 0.0 {
            return Some(0.0);
        }
        let v = f(x) * w;
        v.is_finite().then_some(v)
    };

    let (value, var, evals, bad) = match cfg.strategy {
        Strategy::StratifiedMc => {
            let m = strata_per_axis(cfg.max_evals, n);
            let strata = m.pow(n as u32);
            let blocks = strata.div_ceil(BLOCK);
            let parts: Vec<Acc> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut acc = Acc::default();
                    let mut u = [0.0f64; 8];
                    let mut x = [0.0f64; 8];
                    let mut cell = [0u64; 8];
                    for s in b * BLOCK..((b + 1) * BLOCK).min(strata) {
                        let mut rng = substream(cfg.seed, s);
                        let mut r = s;
                        for c in cell.iter_mut().take(n) {
                            *c = r % m;
                            r /= m;
                        }
                        let mut s1 = 0.0;
                        let mut s2 = 0.0;
                        for _ in 0..SAMPLES_PER_STRATUM {
                            for k in 0..n {
                                let r: f64 = rng.random();
                                u[k] = (cell[k] as f64 + r) / m as f64;
                            }
                            match eval(&u[..n], &mut x) {
                                Some(v) => {
                                    s1 += v;
                                    s2 += v * v;
                                }
                                None => acc.bad += 1,
                            }
                        }
                        let k = SAMPLES_PER_STRATUM as f64;
                        let mean = s1 / k;
                        acc.sum += mean;
                        acc.var += ((s2 - k * mean * mean) / (k - 1.0)).max(0.0) / k;
                        acc.n += SAMPLES_PER_STRATUM;
                    }
                    acc
                })
                .collect();
            let mut tot = Acc::default();
            for p in &parts {
                tot.sum += p.sum;
                tot.var += p.var;
                tot.n += p.n;
                tot.bad += p.bad;
            }
            let s = strata as f64;
            (tot.sum / s, tot.var / (s * s), tot.n, tot.bad)
        }
        Strategy::PlainMc | Strategy::Adaptive1d => {
            if cfg.strategy == Strategy::Adaptive1d {
                return Err(Error::Config("adaptive_1d strategy is 1D only".into()));
            }
            let total = cfg.max_evals.max(2);
            let blocks = total.div_ceil(BLOCK);
            let parts: Vec<Acc> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut acc = Acc::default();
                    let mut rng = substream(cfg.seed, b);
                    let mut u = [0.0f64; 8];
                    let mut x = [0.0f64; 8];
                    for _ in b * BLOCK..((b + 1) * BLOCK).min(total) {
                        for uk in u.iter_mut().take(n) {
                            *uk = rng.random();
                        }
                        match eval(&u[..n], &mut x) {
                            Some(v) => {
                                acc.sum += v;
                                acc.sumsq += v * v;
                            }
                            None => acc.bad += 1,
                        }
                        acc.n += 1;
                    }
                    acc
                })
                .collect();
            let mut tot = Acc::default();
            for p in &parts {
                tot.sum += p.sum;
                tot.sumsq += p.sumsq;
                tot.n += p.n;
                tot.bad += p.bad;
            }
            let k = tot.n as f64;
            let mean = tot.sum / k;
            let var = ((tot.sumsq - k * mean * mean) / (k - 1.0)).max(0.0) / k;
            (mean, var, tot.n, tot.bad)
        }
    };
    if bad > 0 {
        return Err(Error::BadIntegrand { bad, total: evals });
    }
    let err = var.sqrt();
    Ok(IntegralResult {
        value,
        error_estimate: err,
        n_evals: evals,
        converged: err <= cfg.tolerance(value),
    })
}
