//! Jump trajectories of one particle on a finite set of sites.

use crate::error::{Error, Result};
use crate::kernels::{erf_kernel_f, ModelParams, ParticleSpec};
use crate::quadrature::substream;
use crate::vec3::{self, Vec3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    sites: Vec<Vec3>,
    amplitudes: Vec<Complex64>,
}

impl LatticeState {
    /// Normalizes the amplitudes.
    pub fn new(sites: Vec<Vec3>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if sites.len() < 2 {
            return Err(Error::Config("a lattice state needs at least 2 sites".into()));
        }
        if sites.len() != amplitudes.len() {
            return Err(Error::Config("one amplitude per site".into()));
        }
        if sites.iter().any(|s| !vec3::is_finite(s)) {
            return Err(Error::Domain("site positions must be finite".into()));
        }
        let mut s = Self { sites, amplitudes };
        s.normalize().map_err(|_| Error::Domain("amplitudes must be finite and not all zero".into()))?;
        Ok(s)
    }

    /// Equal-weight superposition of two sites at ±separation/2 on the z axis.
    pub fn two_site(separation: f64) -> Result<Self> {
        let h = 0.5 * separation;
        Self::new(
            vec![[0.0, 0.0, h], [0.0, 0.0, -h]],
            vec![Complex64::new(1.0, 0.0); 2],
        )
    }

    pub fn sites(&self) -> &[Vec3] {
        &self.sites
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn normalize(&mut self) -> std::result::Result<(), String> {
        let n = self.norm_sqr().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(format!("state norm {n} cannot be renormalized"));
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepEvent {
    None,
    Collapse { site: usize, center: Vec3 },
}

/// Collapse rate γ m_p / m0.
pub fn collapse_rate(particle: &ParticleSpec, params: &ModelParams) -> f64 {
    params.gamma * particle.mass / params.constants.m0
}

/// Draw a collapse center from ⟨μ_rC⟩/m_p: a site with probability |ψ_i|²,
/// then a Gaussian offset of width r_C.
pub fn sample_collapse_center<R: Rng + ?Sized>(state: &LatticeState, rng: &mut R, r_c: f64) -> (usize, Vec3) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut site = state.sites.len() - 1;
    for (i, a) in state.amplitudes.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            site = i;
            break;
        }
    }
    let q = state.sites[site];
    let c = [
        q[0] + r_c * rng.sample::<f64, _>(StandardNormal),
        q[1] + r_c * rng.sample::<f64, _>(StandardNormal),
        q[2] + r_c * rng.sample::<f64, _>(StandardNormal),
    ];
    (site, c)
}

/// ψ_j → e^{i r_p f(|q_j − x_c|)} √g(q_j − x_c) ψ_j, then renormalize.
pub fn apply_collapse(
    state: &mut LatticeState,
    center: &Vec3,
    particle: &ParticleSpec,
    params: &ModelParams,
    gravity_on: bool,
) -> Result<()> {
    let r_c = params.r_c;
    let r_p = particle.r_p(params);
    // √g up to a constant, in log form so distant sites do not all underflow
    let logw: Vec<f64> = state
        .sites
        .iter()
        .map(|q| -vec3::norm2(&vec3::sub(q, center)) / (4.0 * r_c * r_c))
        .collect();
    let top = logw
        .iter()
        .zip(&state.amplitudes)
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    for (j, a) in state.amplitudes.iter_mut().enumerate() {
        let mut factor = Complex64::new((logw[j] - top).exp(), 0.0);
        if gravity_on {
            let phase = r_p * erf_kernel_f(vec3::dist(&state.sites[j], center), r_c);
            factor *= Complex64::from_polar(1.0, phase);
        }
        *a *= factor;
    }
    state.normalize().map_err(|reason| Error::TrajectoryAbort {
        aborted: 1,
        total: 1,
        reason,
    })
}

fn apply_phases(state: &mut LatticeState, rates: &[f64], dt: f64) {
    for (a, w) in state.amplitudes.iter_mut().zip(rates) {
        *a *= Complex64::from_polar(1.0, -w * dt);
    }
}

/// One fixed step: a collapse occurs with probability γ(m_p/m0)dt.
pub fn step<R: Rng + ?Sized>(
    state: &mut LatticeState,
    dt: f64,
    rng: &mut R,
    particle: &ParticleSpec,
    params: &ModelParams,
    gravity_on: bool,
) -> Result<StepEvent> {
    let p = collapse_rate(particle, params) * dt;
    if p > MAX_EVENTS_PER_STEP {
        return Err(Error::Validity(format!(
            "collapse probability per step {p} exceeds {MAX_EVENTS_PER_STEP}"
        )));
    }
    let u: f64 = rng.random();
    if u >= p {
        return Ok(StepEvent::None);
    }
    let (site, center) = sample_collapse_center(state, rng, params.r_c);
    apply_collapse(state, &center, particle, params, gravity_on)?;
    Ok(StepEvent::Collapse { site, center })
}

/// Upper bound on γ(m_p/m0)dt.
pub const MAX_EVENTS_PER_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// Fixed dt with a Bernoulli collapse decision per step.
    Fixed,
    /// Exponential waiting times between collapses.
    EventDriven,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    pub particle: ParticleSpec,
    pub params: ModelParams,
    pub gravity_on: bool,
    /// Number of recorded times, including t = 0 and t_final.
    pub n_records: usize,
    pub stepper: Stepper,
    /// Site-local phase rates ω_j (ψ_j → e^{-iω_j dt}ψ_j); empty means none.
    pub site_phase_rates: Vec<f64>,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, t_final: f64, n_trajectories: usize, seed: u64, particle: ParticleSpec, params: ModelParams) -> Self {
        Self {
            dt,
            t_final,
            n_trajectories,
            seed,
            particle,
            params,
            gravity_on: true,
            n_records: 21,
            stepper: Stepper::Fixed,
            site_phase_rates: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_final > 0.0 && self.dt.is_finite() && self.t_final.is_finite()) {
            return Err(Error::Config("dt and t_final must be positive".into()));
        }
        let p = collapse_rate(&self.particle, &self.params) * self.dt;
        if p > MAX_EVENTS_PER_STEP {
            return Err(Error::Config(format!(
                "dt·γ m_p/m0 = {p} exceeds {MAX_EVENTS_PER_STEP}"
            )));
        }
        if self.n_trajectories == 0 {
            return Err(Error::Config("n_trajectories must be positive".into()));
        }
        if self.n_records < 2 {
            return Err(Error::Config("n_records must be >= 2".into()));
        }
        if self.n_steps() < (self.n_records - 1) as u64 {
            return Err(Error::Config("fewer steps than recorded times".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_final / self.dt).round() as u64
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_records - 1;
        match self.stepper {
            Stepper::Fixed => (0..=n).map(|g| self.record_step(g) as f64 * self.dt).collect(),
            Stepper::EventDriven => (0..=n).map(|g| self.t_final * g as f64 / n as f64).collect(),
        }
    }

    fn record_step(&self, g: usize) -> u64 {
        let n = (self.n_records - 1) as u64;
        (g as u64 * self.n_steps() + n / 2) / n
    }
}

/// Outcome of one trajectory: ψ at every recorded time and the collapse count.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Vec<Complex64>>,
    pub collapses: u32,
}

fn check_norm(state: &LatticeState) -> std::result::Result<(), String> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(format!("norm drifted to {n}"));
    }
    Ok(())
}

/// Run trajectory `index` of the ensemble described by `cfg`.
pub fn run_trajectory(cfg: &TrajectoryConfig, initial: &LatticeState, index: u64) -> std::result::Result<Trajectory, String> {
    let mut rng = substream(cfg.seed, index);
    let mut state = initial.clone();
    let mut snapshots = Vec::with_capacity(cfg.n_records);
    snapshots.push(state.amplitudes.clone());
    let mut collapses = 0u32;
    let collapse = |state: &mut LatticeState, rng: &mut rand_chacha::ChaCha8Rng| {
        let (_, c) = sample_collapse_center(state, rng, cfg.params.r_c);
        apply_collapse(state, &c, &cfg.particle, &cfg.params, cfg.gravity_on).map_err(|e| e.to_string())?;
        check_norm(state)
    };
    match cfg.stepper {
        Stepper::Fixed => {
            let p = collapse_rate(&cfg.particle, &cfg.params) * cfg.dt;
            let mut g = 1;
            for k in 1..=cfg.n_steps() {
                apply_phases(&mut state, &cfg.site_phase_rates, cfg.dt);
                let u: f64 = rng.random();
                if u < p {
                    collapse(&mut state, &mut rng)?;
                    collapses += 1;
                }
                while g < cfg.n_records && cfg.record_step(g) == k {
                    snapshots.push(state.amplitudes.clone());
                    g += 1;
                }
            }
        }
        Stepper::EventDriven => {
            let rate = collapse_rate(&cfg.particle, &cfg.params);
            let wait = Exp::new(rate).map_err(|e| e.to_string())?;
            let times = cfg.times();
            let mut t = 0.0;
            let mut next = rng.sample(wait);
            for &tr in &times[1..] {
                while next <= tr {
                    apply_phases(&mut state, &cfg.site_phase_rates, next - t);
                    t = next;
                    collapse(&mut state, &mut rng)?;
                    collapses += 1;
                    next = t + rng.sample(wait);
                }
                apply_phases(&mut state, &cfg.site_phase_rates, tr - t);
                t = tr;
                snapshots.push(state.amplitudes.clone());
            }
        }
    }
    Ok(Trajectory { snapshots, collapses })
}

/// Number of batches whose means drive the fit error estimate.
pub const N_BATCHES: usize = 20;
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub n_sites: usize,
    /// ρ̄[t][i·n + j]
    pub rho: Vec<Vec<Complex64>>,
    /// Standard errors of the real and imaginary parts of ρ̄.
    pub rho_se: Vec<Vec<Complex64>>,
    /// ρ̄ per contiguous batch of trajectories: batch_rho[b][t][i·n + j].
    pub batch_rho: Vec<Vec<Vec<Complex64>>>,
    pub collapse_counts: Vec<u32>,
}

impl EnsembleResult {
    pub fn entry(&self, t: usize, i: usize, j: usize) -> Complex64 {
        self.rho[t][i * self.n_sites + j]
    }
}

#[derive(Clone)]
struct Partial {
    sum: Vec<Vec<Complex64>>,
    sq: Vec<Vec<Complex64>>,
    batches: Vec<Vec<Vec<Complex64>>>,
    counts: Vec<u32>,
    aborted: usize,
    reason: Option<String>,
}

/// Ensemble average of ψ_i ψ_j* over independent trajectories.
pub fn run_ensemble(cfg: &TrajectoryConfig, initial: &LatticeState) -> Result<EnsembleResult> {
    cfg.validate()?;
    if !cfg.site_phase_rates.is_empty() && cfg.site_phase_rates.len() != initial.sites.len() {
        return Err(Error::Config("one phase rate per site".into()));
    }
    let n = initial.sites.len();
    let nt = cfg.n_records;
    let ntraj = cfg.n_trajectories;
    let nb = N_BATCHES.min(ntraj);
    let zero = vec![vec![Complex64::new(0.0, 0.0); n * n]; nt];
    let chunks: Vec<Partial> = (0..ntraj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut p = Partial {
                sum: zero.clone(),
                sq: zero.clone(),
                batches: vec![zero.clone(); nb],
                counts: Vec::with_capacity(CHUNK),
                aborted: 0,
                reason: None,
            };
            for k in c * CHUNK..((c + 1) * CHUNK).min(ntraj) {
                let b = k * nb / ntraj;
                match run_trajectory(cfg, initial, k as u64) {
                    Ok(tr) => {
                        for (t, psi) in tr.snapshots.iter().enumerate() {
                            for i in 0..n {
                                for j in 0..n {
                                    let r = psi[i] * psi[j].conj();
                                    p.sum[t][i * n + j] += r;
                                    p.sq[t][i * n + j] += Complex64::new(r.re * r.re, r.im * r.im);
                                    p.batches[b][t][i * n + j] += r;
                                }
                            }
                        }
                        p.counts.push(tr.collapses);
                    }
                    Err(reason) => {
                        p.aborted += 1;
                        p.reason.get_or_insert(reason);
                    }
                }
            }
            p
        })
        .collect();
    let aborted: usize = chunks.iter().map(|p| p.aborted).sum();
    if aborted > 0 {
        let reason = chunks.iter().find_map(|p| p.reason.clone()).unwrap_or_default();
        return Err(Error::TrajectoryAbort { aborted, total: ntraj, reason });
    }
    let mut sum = zero.clone();
    let mut sq = zero.clone();
    let mut batches = vec![zero.clone(); nb];
    let mut counts = Vec::with_capacity(ntraj);
    for p in chunks {
        for t in 0..nt {
            for e in 0..n * n {
                sum[t][e] += p.sum[t][e];
                sq[t][e] += p.sq[t][e];
                for b in 0..nb {
                    batches[b][t][e] += p.batches[b][t][e];
                }
            }
        }
        counts.extend(p.counts);
    }
    let nf = ntraj as f64;
    let mut rho = zero.clone();
    let mut se = zero;
    for t in 0..nt {
        for e in 0..n * n {
            let m = sum[t][e] / nf;
            rho[t][e] = m;
            let var = |s2: f64, mu: f64| ((s2 / nf - mu * mu).max(0.0) / (nf - 1.0).max(1.0)).sqrt();
            se[t][e] = Complex64::new(var(sq[t][e].re, m.re), var(sq[t][e].im, m.im));
        }
    }
    for (b, bm) in batches.iter_mut().enumerate() {
        let size = ((b + 1) * ntraj / nb - b * ntraj / nb) as f64;
        for row in bm.iter_mut() {
            for v in row.iter_mut() {
                *v /= size;
            }
        }
    }
    Ok(EnsembleResult {
        times: cfg.times(),
        n_sites: n,
        rho,
        rho_se: se,
        batch_rho: batches,
        collapse_counts: counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub error: f64,
    pub warning: Option<String>,
}

/// Weighted least-squares slope of y(t); returns (slope, intercept).
fn weighted_slope(t: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let tm = t.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..t.len() {
        num += w[k] * (t[k] - tm) * (y[k] - ym);
        den += w[k] * (t[k] - tm) * (t[k] - tm);
    }
    let slope = num / den;
    (slope, ym - slope * tm)
}

/// Decay rate of |ρ̄(t)| from a log-linear fit.
///
/// `sigma` holds the standard error of each magnitude (None: unweighted).
pub fn fit_log_decay(times: &[f64], mags: &[f64], sigma: Option<&[f64]>) -> Result<RateFit> {
    if times.len() < 10 || times.len() != mags.len() {
        return Err(Error::Domain("decay fit needs >= 10 time points".into()));
    }
    if mags.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::Domain("decay fit needs positive magnitudes".into()));
    }
    let y: Vec<f64> = mags.iter().map(|m| m.ln()).collect();
    let sl: Vec<f64> = match sigma {
        Some(s) => s.iter().zip(mags).map(|(s, m)| (s / m).max(1e-9)).collect(),
        None => vec![1.0; mags.len()],
    };
    let w: Vec<f64> = sl.iter().map(|s| 1.0 / (s * s)).collect();
    let (slope, icpt) = weighted_slope(times, &y, &w);
    let worst = (0..y.len())
        .filter(|&k| sigma.is_some() && sl[k] > 1e-9)
        .map(|k| ((y[k] - icpt - slope * times[k]) / sl[k]).abs())
        .fold(0.0, f64::max);
    let warning = (worst > 5.0).then(|| format!("non-exponential residual of {worst:.1} sigma"));
    Ok(RateFit {
        rate: -slope,
        error: 0.0,
        warning,
    })
}

/// Decay rate of |ρ̄_ij(t)|. The error is the standard error of the same fit
/// repeated on each batch of trajectories.
pub fn decay_rate_fit(result: &EnsembleResult, i: usize, j: usize) -> Result<RateFit> {
    let n = result.n_sites;
    if i >= n || j >= n || i == j {
        return Err(Error::Domain("need two distinct sites".into()));
    }
    let e = i * n + j;
    let mags: Vec<f64> = result.rho.iter().map(|r| r[e].norm()).collect();
    let sig: Vec<f64> = result
        .rho
        .iter()
        .zip(&result.rho_se)
        .map(|(r, s)| {
            let m = r[e].norm();
            if m == 0.0 {
                0.0
            } else {
                ((r[e].re * s[e].re).powi(2) + (r[e].im * s[e].im).powi(2)).sqrt() / m
            }
        })
        .collect();
    let mut fit = fit_log_decay(&result.times, &mags, Some(&sig))?;
    let slopes: Vec<f64> = result
        .batch_rho
        .iter()
        .filter_map(|b| {
            let m: Vec<f64> = b.iter().map(|r| r[e].norm()).collect();
            fit_log_decay(&result.times, &m, Some(&sig)).ok().map(|f| f.rate)
        })
        .collect();
    if slopes.len() >= 2 {
        let k = slopes.len() as f64;
        let mean = slopes.iter().sum::<f64>() / k;
        let var = slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
        fit.error = (var / k).sqrt();
    } else {
        fit.error = f64::NAN;
    }
    Ok(fit)
}
