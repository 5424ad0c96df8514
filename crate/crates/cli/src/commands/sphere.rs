use crate::commands::status;
use crate::config::{grid, KeySpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir, Table};
use crate::svg::{Plot, Series};
use gpsl_core::kernels::TDParams;
use gpsl_core::rigid_sphere::*;

pub const KEYS: &[KeySpec] = &[
    ("models", "gpsl,td_dp,td_csl", "comma list of gpsl, td_dp, td_csl"),
    ("x_min", "0", "first D_tilde"),
    ("x_max", "2", "last D_tilde"),
    ("x_step", "0.01", "grid spacing"),
    ("units", "si", "unit or si"),
    ("gamma", "1e-9", "collapse rate per reference mass"),
    ("r_c", "1e-7", "smearing length"),
    ("mu0", "100", "mass density for the balance-radius report"),
    ("radius", "", "sphere radius; when set, full rates are written"),
    ("gamma_csl", "", "TD-CSL noise strength (needed for td_csl rates)"),
    ("seed", "1", "master seed (recorded only; the kernels are closed forms)"),
];

type Kernel = (&'static str, fn(f64) -> f64);

const KERNELS: [Kernel; 6] = [
    ("k_c", k_c),
    ("k_g_gpsl", k_g_gpsl),
    ("k_g_gpsl_integral", k_g_gpsl_integral),
    ("k_g_dp", k_g_dp),
    ("k_g_csl", k_g_csl),
    ("f_sp", f_sp),
];

fn model(name: &str) -> CliResult<(SphereModel, &'static str)> {
    match name {
        "gpsl" => Ok((SphereModel::Gpsl, "k_g_gpsl")),
        "td_dp" => Ok((SphereModel::TdDp, "k_g_dp")),
        "td_csl" => Ok((SphereModel::TdCsl, "k_g_csl")),
        o => Err(CliError::Usage(format!("unknown model {o:?}"))),
    }
}

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> CliResult<()> {
    let models: Vec<(String, SphereModel, &str)> = cfg
        .list("models")
        .into_iter()
        .map(|n| model(&n).map(|(m, k)| (n, m, k)))
        .collect::<CliResult<_>>()?;
    let xs = grid(cfg.f64("x_min")?, cfg.f64("x_max")?, cfg.f64("x_step")?)?;
    let params = cfg.model_params()?;

    // both branches must meet at x = 1 before anything is plotted
    let mut cont = Table::new(&["kernel", "below", "at", "abs_diff", "status"]);
    let mut broken = Vec::new();
    for (name, f) in KERNELS {
        let a = f(1.0 - f64::EPSILON);
        let b = f(1.0);
        let ok = (a - b).abs() <= 1e-12;
        if !ok {
            broken.push(name);
        }
        cont.push(vec![name.into(), num(a), num(b), num((a - b).abs()), status(ok)]);
    }
    out.csv("sphere_continuity.csv", &cont)?;
    if !broken.is_empty() {
        return Err(CliError::OracleGate(format!("discontinuous at x = 1: {}", broken.join(", "))));
    }

    let mut header = vec!["d_tilde"];
    header.extend(KERNELS.iter().map(|k| k.0));
    let mut t = Table::new(&header);
    for &x in &xs {
        let mut row = vec![num(x)];
        row.extend(KERNELS.iter().map(|k| num((k.1)(x))));
        t.push(row);
    }
    out.csv("sphere_kernels.csv", &t)?;

    let plot = Plot {
        title: "Rigid-sphere gravitational kernels".into(),
        x_label: "D̃".into(),
        y_label: "K_G".into(),
        series: models
            .iter()
            .map(|(n, _, k)| {
                let f = KERNELS.iter().find(|e| e.0 == *k).unwrap().1;
                Series::line(n, xs.iter().map(|&x| (x, f(x))).collect())
            })
            .collect(),
        ..Plot::default()
    };
    out.write("sphere_kernels.svg", &plot.render())?;

    let mu0 = cfg.f64("mu0")?;
    let b = balance_radius(mu0, &params)?;
    let mut bt = Table::new(&["mu0", "r_balance", "r_balance_scaling"]);
    bt.push(vec![num(mu0), num(b.exact), num(b.scaling)]);
    out.csv("sphere_balance.csv", &bt)?;
    println!("balance radius R_M = R at {:.4e} (scaling estimate {:.4e})", b.exact, b.scaling);

    if let Some(radius) = cfg.opt_f64("radius")? {
        let sphere = SphereSpec::from_density(mu0, radius)?;
        let td = cfg.opt_f64("gamma_csl")?.map(TDParams::new).transpose()?;
        let mut header = vec!["d_tilde"];
        header.extend(models.iter().map(|m| m.0.as_str()));
        let mut rt = Table::new(&header);
        for &x in &xs {
            let mut row = vec![num(x)];
            for (_, m, _) in &models {
                row.push(num(gamma_sphere(*m, x, &sphere, &params, td.as_ref())?.rate));
            }
            rt.push(row);
        }
        out.csv("sphere_rates.csv", &rt)?;
    }
    Ok(())
}
