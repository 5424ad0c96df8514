pub mod check;
pub mod covariance;
pub mod decoherence;
pub mod force;
pub mod ftilde;
pub mod simulate;
pub mod sphere;

use crate::config::{KeySpec, RunConfig};
use crate::error::CliResult;
use crate::output::OutDir;
use gpsl_core::kernels::{ModelParams, ParticleSpec};

pub type Runner = fn(&RunConfig, &mut OutDir) -> CliResult<()>;

/// (name, keys, runner) for every subcommand.
pub const COMMANDS: [(&str, &[KeySpec], Runner); 7] = [
    ("ftilde", ftilde::KEYS, ftilde::run),
    ("decoherence", decoherence::KEYS, decoherence::run),
    ("sphere", sphere::KEYS, sphere::run),
    ("force", force::KEYS, force::run),
    ("covariance", covariance::KEYS, covariance::run),
    ("simulate", simulate::KEYS, simulate::run),
    ("check", check::KEYS, check::run),
];

pub fn lookup(name: &str) -> Option<(&'static str, &'static [KeySpec], Runner)> {
    COMMANDS.iter().copied().find(|c| c.0 == name)
}

pub(crate) fn status(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.into()
}

/// Particle from `mass` when set, otherwise from `rp_ratio`.
pub(crate) fn particle(cfg: &RunConfig, params: &ModelParams) -> CliResult<ParticleSpec> {
    Ok(match cfg.opt_f64("mass")? {
        Some(m) => ParticleSpec::new(m)?,
        None => ParticleSpec::with_rp_ratio(cfg.f64("rp_ratio")?, params)?,
    })
}

/// Uniform [0, 1) from the top 53 bits of a derived seed.
pub(crate) fn unit_uniform(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}
