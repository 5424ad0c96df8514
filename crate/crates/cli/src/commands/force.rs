use crate::commands::{status, unit_uniform};
use crate::config::{grid, KeySpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir, Table};
use crate::svg::{Plot, Series};
use gpsl_core::forces::*;
use gpsl_core::quadrature::{derive_seed, QuadratureConfig};
use rayon::prelude::*;
use std::f64::consts::PI;

pub const KEYS: &[KeySpec] = &[
    ("d_min", "0", "first d_r"),
    ("d_max", "10", "last d_r"),
    ("d_step", "0.05", "grid spacing"),
    ("units", "unit", "unit or si"),
    ("gamma", "1", "collapse rate per reference mass"),
    ("r_c", "1", "smearing length"),
    ("pairs", "64", "random pairs in the swap-symmetry report"),
    ("impulse_samples", "100000", "collapse samples for the impulse balance check"),
    ("seed", "1", "master seed"),
];

fn tight() -> QuadratureConfig {
    QuadratureConfig::adaptive(1e-15, 1e-11)
}

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> CliResult<()> {
    let ds = grid(cfg.f64("d_min")?, cfg.f64("d_max")?, cfg.f64("d_step")?)?;
    let params = cfg.model_params()?;
    let seed = cfg.u64("seed")?;
    let q = tight();
    let slope = 4.0 / (3.0 * PI * PI);

    let res: Vec<_> = ds.par_iter().map(|&d| f_tilde_g(d, &q)).collect::<Result<_, _>>()?;
    let mut t = Table::new(&["d_r", "f_tilde_g", "std_error", "small_asymptote", "large_asymptote"]);
    for (d, r) in ds.iter().zip(&res) {
        let large = if *d > 0.0 { 0.5 / (d * d) } else { f64::INFINITY };
        t.push(vec![num(*d), num(r.value), num(r.error_estimate), num(slope * d), num(large)]);
    }
    out.csv("force.csv", &t)?;
    let unconverged = res.iter().filter(|r| !r.converged).count();

    let plot = Plot {
        title: "Average pair force F̃_G(d_r)".into(),
        x_label: "d_r".into(),
        y_label: "F̃_G".into(),
        series: vec![
            Series::line("F̃_G", ds.iter().zip(&res).map(|(d, r)| (*d, r.value)).collect()),
            Series::dashed("4 d_r/(3π²)", ds.iter().filter(|d| **d <= 1.0).map(|d| (*d, slope * d)).collect()),
            Series::dashed("1/(2 d_r²)", ds.iter().filter(|d| **d >= 1.5).map(|d| (*d, 0.5 / (d * d))).collect()),
        ],
        ..Plot::default()
    };
    out.write("force.svg", &plot.render())?;

    let mut checks = Table::new(&["check", "computed", "reference", "tolerance", "status"]);
    let mut failed = Vec::new();
    let mut check = |name: &str, computed: f64, reference: f64, tol: f64, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
        checks.push(vec![name.into(), num(computed), num(reference), num(tol), status(ok)]);
    };
    let small = f_tilde_g(0.05, &q)?.value;
    let rel = (small / (slope * 0.05) - 1.0).abs();
    check("small_asymptote_0.05", small, slope * 0.05, 0.05, rel <= 0.05);
    let large = f_tilde_g(10.0, &q)?.value;
    let rel = (large / 0.005 - 1.0).abs();
    check("large_asymptote_10", large, 0.005, 0.02, rel <= 0.02);

    let r_c = params.r_c;
    let sep = 100.0 * r_c;
    let newton_pair = PairConfiguration::new(1.0, 1.0, [sep, 0.0, 0.0], [0.0; 3])?;
    let f = average_force(&newton_pair, &params, &q)?.magnitude();
    let newton = params.constants.g / (sep * sep);
    check("newton_100_r_c", f, newton, 1e-2, (f / newton - 1.0).abs() <= 1e-2);

    // swap symmetry on random pairs inside a 12 r_C box
    let n_pairs = cfg.usize("pairs")?;
    let worst = (0..n_pairs)
        .map(|i| -> CliResult<f64> {
            let u = |k: u64| unit_uniform(derive_seed(seed, (i as u64) << 8 | k));
            let m_j = 0.1 + 10.0 * u(0);
            let m_k = 0.1 + 10.0 * u(1);
            let a = [0, 1, 2].map(|c| (12.0 * u(2 + c) - 6.0) * r_c);
            let b = [0, 1, 2].map(|c| (12.0 * u(5 + c) - 6.0) * r_c);
            let pair = PairConfiguration::new(m_j, m_k, a, b)?;
            let f1 = average_force(&pair, &params, &q)?;
            let f2 = average_force(&pair.swapped(), &params, &q)?;
            let mag = f1.magnitude();
            if mag == 0.0 {
                return Ok(0.0);
            }
            Ok((0..3).map(|c| (f1.components[c] + f2.components[c]).abs() / mag).fold(0.0, f64::max))
        })
        .collect::<CliResult<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    check("swap_symmetry_max_rel", worst, 0.0, 1e-12, worst <= 1e-12);

    // equal masses at mirror positions: sampled total impulse vanishes
    let n = cfg.u64("impulse_samples")?;
    let mirror = PairConfiguration::new(1.0, 1.0, [0.0, 0.0, 1.5 * r_c], [0.0, 0.0, -1.5 * r_c])?;
    let est = mc_mean_impulse(&mirror, n, derive_seed(seed, 1 << 40), &params)?;
    for (c, axis) in ["x", "y", "z"].iter().enumerate() {
        let v = est.total.components[c];
        let se = est.total.error[c];
        check(&format!("total_impulse_{axis}"), v, 0.0, 3.0 * se, v.abs() <= 3.0 * se);
    }
    out.csv("force_checks.csv", &checks)?;
    println!("worst swap residual {worst:.2e}; F̃_G(0.05) / (4 d_r/(3π²)) = {:.4}", small / (slope * 0.05));

    if unconverged > 0 {
        return Err(CliError::NonConvergence(format!("{unconverged} F̃_G points did not converge")));
    }
    if !failed.is_empty() {
        return Err(CliError::OracleGate(failed.join(", ")));
    }
    Ok(())
}
