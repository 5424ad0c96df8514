use crate::commands::{particle, status};
use crate::config::{grid, KeySpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir, Table};
use crate::svg::{Plot, Series};
use gpsl_core::kernels::{ModelParams, ParticleSpec, TDParams};
use gpsl_core::quadrature::{derive_seed, QuadratureConfig};
use gpsl_core::single_particle::*;
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

pub const KEYS: &[KeySpec] = &[
    ("models", "gpsl,td_dp", "comma list of gpsl, td_csl, td_dp"),
    ("gpsl_method", "exact", "exact (3D MC) or perturbative (F̃ expansion)"),
    ("units", "unit", "unit (G = ħ = m0 = 1) or si (CODATA)"),
    ("gamma", "1", "collapse rate per reference mass"),
    ("r_c", "1", "smearing length"),
    ("mass", "", "particle mass; overrides rp_ratio when set"),
    ("rp_ratio", "0.1", "particle mass given as r_p/r_C"),
    ("gamma_csl", "", "TD-CSL noise strength (required for td_csl)"),
    ("d_min", "0", "first d_tilde"),
    ("d_max", "10", "last d_tilde"),
    ("d_step", "0.05", "grid spacing"),
    ("evals", "200000", "MC evaluations per GPSL point"),
    ("rel_tol", "0.01", "largest accepted standard error relative to the total rate"),
    ("asymptote_d", "1e13", "d_tilde used to read off plateau values"),
    ("seed", "1", "master seed"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Which {
    Gpsl,
    TdCsl,
    TdDp,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Gpsl => "gpsl",
            Which::TdCsl => "td_csl",
            Which::TdDp => "td_dp",
        }
    }
}

struct Ctx {
    particle: ParticleSpec,
    params: ModelParams,
    td: Option<TDParams>,
    q: QuadratureConfig,
    perturbative: bool,
}

impl Ctx {
    fn rate(&self, m: Which, d: f64, index: u64) -> CliResult<DecoherencePoint> {
        let q = self.q.with_seed(derive_seed(self.q.seed, index));
        Ok(match m {
            Which::Gpsl if self.perturbative => gamma_gpsl_perturbative(d, &self.particle, &self.params, FTildeSource::Direct(q))?,
            Which::Gpsl => gamma_gpsl_exact(d, &self.particle, &self.params, &q)?,
            Which::TdDp => gamma_td_dp(d, &self.particle, &self.params)?,
            Which::TdCsl => gamma_td_csl(d, &self.particle, &self.params, self.td.as_ref().expect("checked"))?,
        })
    }
}

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> CliResult<()> {
    let models: Vec<Which> = cfg
        .list("models")
        .iter()
        .map(|m| match m.as_str() {
            "gpsl" => Ok(Which::Gpsl),
            "td_csl" => Ok(Which::TdCsl),
            "td_dp" => Ok(Which::TdDp),
            o => Err(CliError::Usage(format!("unknown model {o:?}"))),
        })
        .collect::<CliResult<_>>()?;
    if models.is_empty() {
        return Err(CliError::Usage("models must name at least one model".into()));
    }
    let params = cfg.model_params()?;
    let td = match cfg.opt_f64("gamma_csl")? {
        Some(g) => Some(TDParams::new(g)?),
        None if models.contains(&Which::TdCsl) => {
            return Err(CliError::Usage("td_csl needs gamma_csl".into()));
        }
        None => None,
    };
    let perturbative = match cfg.raw("gpsl_method") {
        "exact" => false,
        "perturbative" => true,
        o => return Err(CliError::Usage(format!("gpsl_method must be exact or perturbative, got {o:?}"))),
    };
    let ctx = Ctx {
        particle: particle(cfg, &params)?,
        params,
        td,
        q: QuadratureConfig::stratified(cfg.u64("evals")?, cfg.u64("seed")?),
        perturbative,
    };
    let ds = grid(cfg.f64("d_min")?, cfg.f64("d_max")?, cfg.f64("d_step")?)?;
    let far = cfg.f64("asymptote_d")?;
    let rel_tol = cfg.f64("rel_tol")?;

    let mut plot = Plot {
        title: "Decoherence rate Γ(d̃)".into(),
        x_label: "d̃".into(),
        y_label: "Γ".into(),
        ..Plot::default()
    };
    let mut limits = Table::new(&["model", "quantity", "computed", "closed_form", "rel_diff", "tolerance", "status"]);
    let mut failed = Vec::new();
    let mut limit = |model: &str, quantity: &str, computed: f64, closed: f64, tol: f64| {
        let rel = (computed / closed - 1.0).abs();
        let ok = rel <= tol;
        if !ok {
            failed.push(format!("{model} {quantity}"));
        }
        limits.push(vec![model.into(), quantity.into(), num(computed), num(closed), num(rel), num(tol), status(ok)]);
    };
    let c = ctx.params.constants;
    let base = ctx.params.gamma * ctx.particle.mass / c.m0;
    let mut unconverged = 0usize;

    for (mi, &m) in models.iter().enumerate() {
        let offset = (mi as u64) << 32;
        let pts: Vec<DecoherencePoint> = ds
            .par_iter()
            .enumerate()
            .map(|(i, &d)| ctx.rate(m, d, offset + i as u64))
            .collect::<CliResult<_>>()?;
        unconverged += pts.iter().filter(|p| p.error > rel_tol * p.rate.abs()).count();
        let mut t = Table::new(&["d_tilde", "rate", "std_error"]);
        for p in &pts {
            t.push(vec![num(p.d_tilde), num(p.rate), num(p.error)]);
        }
        out.csv(&format!("decoherence_{}.csv", m.name()), &t)?;
        plot.series.push(Series::line(m.name(), pts.iter().map(|p| (p.d_tilde, p.rate)).collect()));

        match m {
            Which::Gpsl => {
                let r = ctx.rate(m, far, offset + ds.len() as u64)?.rate;
                limit("gpsl", "plateau", r, base, 1e-10);
            }
            Which::TdDp => {
                let closed = 2.0 * SQRT_2 * PI * c.g * ctx.particle.mass.powi(2) / (c.hbar * ctx.params.r_c);
                limit("td_dp", "plateau", ctx.rate(m, far, 0)?.rate, closed, 1e-12);
            }
            Which::TdCsl => {
                if pts.len() >= 2 {
                    let (a, b) = (&pts[pts.len() - 2], &pts[pts.len() - 1]);
                    let slope = (b.rate - a.rate) / (b.d_tilde - a.d_tilde);
                    let gm = c.g * c.m0 * ctx.particle.mass / c.hbar;
                    let closed = PI * ctx.params.r_c / ctx.td.unwrap().gamma_csl * gm * gm;
                    limit("td_csl", "tail_slope", slope, closed, 0.02);
                }
            }
        }
    }
    // mass at which the GPSL and DP plateaus coincide
    let m_star = ctx.params.gamma * c.hbar * ctx.params.r_c / (c.m0 * 2.0 * SQRT_2 * PI * c.g);
    limits.push(vec!["crossover".into(), "mass".into(), num(m_star), String::new(), String::new(), String::new(), String::new()]);

    out.csv("decoherence_limits.csv", &limits)?;
    out.write("decoherence.svg", &plot.render())?;
    println!(
        "particle mass {:e}, r_p/r_C = {:.4e}, GPSL plateau γ m_p/m0 = {:e}; plateau crossover at m_p = {:e}",
        ctx.particle.mass,
        ctx.particle.r_p(&ctx.params) / ctx.params.r_c,
        base,
        m_star
    );
    if unconverged > 0 {
        return Err(CliError::NonConvergence(format!("{unconverged} GPSL points above MC tolerance; raise evals")));
    }
    if !failed.is_empty() {
        return Err(CliError::OracleGate(failed.join(", ")));
    }
    Ok(())
}
