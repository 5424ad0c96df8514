use crate::commands::status;
use crate::config::{KeySpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir, Table};
use gpsl_core::forces::{average_force, f_tilde_g, PairConfiguration};
use gpsl_core::kernels::ModelParams;
use gpsl_core::quadrature::{derive_seed, IntegralResult, QuadratureConfig};
use gpsl_core::rigid_sphere::*;
use gpsl_core::single_particle::{coulomb_difference_norm, self_interaction_null_check};
use std::f64::consts::PI;

pub const KEYS: &[KeySpec] = &[
    ("evals", "4000000", "MC evaluations per oracle integral"),
    ("seed", "1", "master seed"),
];

struct Suite {
    table: Table,
    failed: Vec<String>,
}

impl Suite {
    fn record(&mut self, name: String, computed: f64, reference: f64, tol: f64, ok: bool) {
        if !ok {
            self.failed.push(name.clone());
        }
        self.table.push(vec![name, num(computed), num(reference), num(tol), status(ok)]);
    }

    fn rel(&mut self, name: String, computed: f64, reference: f64, tol: f64) {
        let ok = (computed / reference - 1.0).abs() <= tol;
        self.record(name, computed, reference, tol, ok);
    }

    fn abs(&mut self, name: String, computed: f64, reference: f64, tol: f64) {
        let ok = (computed - reference).abs() <= tol;
        self.record(name, computed, reference, tol, ok);
    }

    /// Zero within three standard errors; the tolerance column holds 3σ.
    fn null(&mut self, name: String, r: &IntegralResult) {
        let tol = 3.0 * r.error_estimate;
        self.record(name, r.value, 0.0, tol, r.value.abs() <= tol);
    }
}

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> CliResult<()> {
    let evals = cfg.u64("evals")?;
    let seed = cfg.u64("seed")?;
    let mut next = 0u64;
    let mut mc = || {
        next += 1;
        QuadratureConfig::stratified(evals, derive_seed(seed, next))
    };
    let mut s = Suite {
        table: Table::new(&["check", "computed", "reference", "tolerance", "status"]),
        failed: Vec::new(),
    };

    let below = 1.0 - f64::EPSILON;
    let kernels: [(&str, fn(f64) -> f64); 5] = [("k_c", k_c), ("k_g_csl", k_g_csl), ("k_g_dp", k_g_dp), ("k_g_gpsl", k_g_gpsl), ("f_sp", f_sp)];
    for (name, f) in kernels {
        s.abs(format!("continuity_{name}"), f(below), f(1.0), 1e-12);
    }
    s.rel("k_g_dp_at_1".into(), k_g_dp(1.0), PI.powf(1.5) / (2.0 * 2f64.sqrt()) * 1.4, 1e-15);
    s.rel("k_g_csl_at_1".into(), k_g_csl(1.0), 41.0 * PI / 70.0, 1e-15);

    for x in [0.25, 0.5, 0.75] {
        s.abs(format!("k_c_vs_mc_{x}"), k_c(x), k_c_mc(x, &mc())?.value, 1e-3);
        s.rel(format!("k_g_gpsl_vs_mc_{x}"), k_g_gpsl(x), k_g_gpsl_mc(x, &mc())?.value, 1e-2);
        s.rel(format!("k_g_dp_vs_mc_{x}"), k_g_dp(x), k_g_dp_mc(x, &mc())?.value, 1e-2);
        s.rel(format!("k_g_csl_vs_mc_{x}"), k_g_csl(x), k_g_csl_mc(x, &mc())?.value, 1e-2);
    }

    for d in [0.5, 1.0, 2.0] {
        let r = coulomb_difference_norm(d, &mc())?;
        let want = 4.0 * PI * d;
        let ok = (r.value - want).abs() <= 3.0 * r.error_estimate && (r.value / want - 1.0).abs() <= 1e-2;
        s.record(format!("coulomb_identity_{d}"), r.value, want, 1e-2, ok);
    }

    let q = QuadratureConfig::adaptive(1e-15, 1e-11);
    let slope = 4.0 / (3.0 * PI * PI);
    s.rel("f_tilde_g_small_0.05".into(), f_tilde_g(0.05, &q)?.value, slope * 0.05, 0.05);
    s.rel("f_tilde_g_large_10".into(), f_tilde_g(10.0, &q)?.value, 0.005, 0.02);
    let params = ModelParams::unit();
    let pair = PairConfiguration::new(1.0, 1.0, [100.0, 0.0, 0.0], [0.0; 3])?;
    s.rel("newton_100_r_c".into(), average_force(&pair, &params, &q)?.magnitude(), 1e-4, 1e-2);

    for d in [0.5, 1.0, 2.0] {
        s.null(format!("self_interaction_null_{d}"), &self_interaction_null_check(d, &mc())?);
    }
    for d in [0.25, 0.5, 0.75] {
        s.null(format!("unitary_sphere_null_{d}"), &unitary_term_sphere_check(d, &mc())?);
    }

    out.csv("check.csv", &s.table)?;
    let n = s.table.len();
    println!("{} of {n} checks passed", n - s.failed.len());
    for f in &s.failed {
        println!("FAIL {f}");
    }
    if !s.failed.is_empty() {
        return Err(CliError::OracleGate(format!("{} of {n} checks failed", s.failed.len())));
    }
    Ok(())
}
