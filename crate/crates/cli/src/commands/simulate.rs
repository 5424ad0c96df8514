use crate::commands::{particle, status};
use crate::config::{KeySpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir, Table};
use crate::svg::{Plot, Series};
use gpsl_core::quadrature::{derive_seed, QuadratureConfig};
use gpsl_core::single_particle::{collapse_factor, gamma_gpsl_exact};
use gpsl_core::trajectories::*;
use std::collections::BTreeMap;

pub const KEYS: &[KeySpec] = &[
    ("d_tilde", "1", "half site separation in units of r_C"),
    ("units", "unit", "unit or si"),
    ("gamma", "1", "collapse rate per reference mass"),
    ("r_c", "10", "smearing length"),
    ("mass", "", "particle mass; overrides rp_ratio when set"),
    ("rp_ratio", "0.1", "particle mass given as r_p/r_C"),
    ("gravity", "true", "apply the gravitational feedback phase"),
    ("stepper", "fixed", "fixed or event"),
    ("dt", "0.002", "time step in units of the inverse collapse rate"),
    ("t_final", "5", "duration in units of the inverse collapse rate"),
    ("n_trajectories", "10000", "ensemble size"),
    ("n_records", "26", "recorded times including 0 and t_final"),
    ("oracle_evals", "400000", "MC evaluations for the analytic rate"),
    ("seed", "1", "master seed"),
];

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> CliResult<()> {
    let params = cfg.model_params()?;
    let particle = particle(cfg, &params)?;
    let lambda = collapse_rate(&particle, &params);
    let d_tilde = cfg.f64("d_tilde")?;
    let seed = cfg.u64("seed")?;
    let mut tc = TrajectoryConfig::new(
        cfg.f64("dt")? / lambda,
        cfg.f64("t_final")? / lambda,
        cfg.usize("n_trajectories")?,
        seed,
        particle,
        params,
    );
    tc.gravity_on = cfg.bool("gravity")?;
    tc.n_records = cfg.usize("n_records")?;
    tc.stepper = match cfg.raw("stepper") {
        "fixed" => Stepper::Fixed,
        "event" => Stepper::EventDriven,
        o => return Err(CliError::Usage(format!("stepper must be fixed or event, got {o:?}"))),
    };
    tc.validate()?;
    let initial = LatticeState::two_site(2.0 * d_tilde * params.r_c)?;
    let res = run_ensemble(&tc, &initial)?;
    let fit = decay_rate_fit(&res, 0, 1)?;

    let (want, want_se) = if tc.gravity_on {
        let q = QuadratureConfig::stratified(cfg.u64("oracle_evals")?, derive_seed(seed, 1 << 40));
        let p = gamma_gpsl_exact(d_tilde, &particle, &params, &q)?;
        (p.rate, p.error)
    } else {
        (lambda * collapse_factor(d_tilde), 0.0)
    };
    let se = (fit.error * fit.error + want_se * want_se).sqrt();
    let z = (fit.rate - want) / se;
    let ok = z.abs() <= 3.0;

    let mut t = Table::new(&["t", "rho01_re", "rho01_im", "rho01_abs", "rho01_se_re", "analytic"]);
    for (k, &time) in res.times.iter().enumerate() {
        let r = res.entry(k, 0, 1);
        let analytic = 0.5 * (-want * time).exp();
        t.push(vec![num(time), num(r.re), num(r.im), num(r.norm()), num(res.rho_se[k][1].re), num(analytic)]);
    }
    out.csv("simulate.csv", &t)?;

    let mut f = Table::new(&["quantity", "value", "std_error"]);
    f.push(vec!["fitted_rate".into(), num(fit.rate), num(fit.error)]);
    f.push(vec!["analytic_rate".into(), num(want), num(want_se)]);
    f.push(vec!["z_score".into(), num(z), String::new()]);
    f.push(vec!["gate".into(), status(ok), String::new()]);
    out.csv("simulate_fit.csv", &f)?;

    let mut hist: BTreeMap<u32, usize> = BTreeMap::new();
    for c in &res.collapse_counts {
        *hist.entry(*c).or_default() += 1;
    }
    let mut h = Table::new(&["collapses", "trajectories"]);
    for (c, n) in hist {
        h.push(vec![c.to_string(), n.to_string()]);
    }
    out.csv("simulate_counts.csv", &h)?;

    let plot = Plot {
        title: "Two-site coherence".into(),
        x_label: "t".into(),
        y_label: "|ρ01|".into(),
        log_y: true,
        series: vec![
            Series::line("ensemble", res.times.iter().enumerate().map(|(k, &t)| (t, res.entry(k, 0, 1).norm())).collect()),
            Series::dashed("e^(-Γt)/2", res.times.iter().map(|&t| (t, 0.5 * (-want * t).exp())).collect()),
        ],
        ..Plot::default()
    };
    out.write("simulate.svg", &plot.render())?;

    println!("fitted rate {:.6e} ± {:.2e}, analytic {:.6e} ± {:.2e}, z = {z:.2}", fit.rate, fit.error, want, want_se);
    if let Some(w) = &fit.warning {
        println!("fit warning: {w}");
    }
    if !ok {
        return Err(CliError::OracleGate(format!("fitted rate is {z:.2} combined standard errors from the analytic rate")));
    }
    Ok(())
}
