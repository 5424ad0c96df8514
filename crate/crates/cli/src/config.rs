//! Flat `key = value` configuration resolved as defaults < file < GPSL_SEED < flags.

use crate::error::{CliError, CliResult};
use gpsl_core::kernels::{ModelParams, PhysicalConstants};
use std::collections::BTreeMap;
use std::path::Path;

/// A documented key: name, default ("" means unset) and a one-line description.
pub type KeySpec = (&'static str, &'static str, &'static str);

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_flat(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Usage(format!("line {}: empty key", n + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> CliResult<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected key=value, got {s:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    pub fn resolve(
        command: &'static str,
        keys: &[KeySpec],
        file: Option<&Path>,
        env_seed: Option<&str>,
        flags: &[(String, String)],
    ) -> CliResult<Self> {
        let mut values: BTreeMap<String, String> =
            keys.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        let mut set = |k: &str, v: &str, origin: &str| -> CliResult<()> {
            match values.get_mut(k) {
                Some(slot) => {
                    *slot = v.to_string();
                    Ok(())
                }
                None => Err(CliError::Usage(format!("unknown key {k:?} for `{command}` ({origin})"))),
            }
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_flat(&text)? {
                set(&k, &v, "config file")?;
            }
        }
        if let Some(s) = env_seed {
            if keys.iter().any(|k| k.0 == "seed") {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("GPSL_SEED must be an unsigned integer, got {s:?}")))?;
                set("seed", s.trim(), "GPSL_SEED")?;
            }
        }
        for (k, v) in flags {
            set(k, v, "flag")?;
        }
        Ok(Self { command, values })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key {key} not declared for {}", self.command))
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        CliError::Usage(format!("{key} = {:?} is not {what}", self.raw(key)))
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        self.raw(key)
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.bad(key, "a finite number"))
    }

    pub fn opt_f64(&self, key: &str) -> CliResult<Option<f64>> {
        if self.is_set(key) {
            self.f64(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn u64(&self, key: &str) -> CliResult<u64> {
        let s = self.raw(key);
        s.parse::<u64>()
            .ok()
            .or_else(|| s.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v < 1.8e19).map(|v| v as u64))
            .ok_or_else(|| self.bad(key, "a non-negative integer"))
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        self.u64(key).map(|v| v as usize)
    }

    pub fn bool(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            _ => Err(self.bad(key, "a boolean")),
        }
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }

    pub fn f64_list(&self, key: &str) -> CliResult<Vec<f64>> {
        self.list(key)
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| self.bad(key, "a comma-separated list of numbers"))
    }

    /// Model parameters from the `units`, `gamma` and `r_c` keys.
    pub fn model_params(&self) -> CliResult<ModelParams> {
        let constants = match self.raw("units") {
            "unit" => PhysicalConstants::unit(),
            "si" => PhysicalConstants::codata(),
            other => return Err(CliError::Usage(format!("units must be `unit` or `si`, got {other:?}"))),
        };
        Ok(ModelParams::new(self.f64("gamma")?, self.f64("r_c")?, constants)?)
    }

    /// `# gpsl <command> k=v ...` with keys sorted.
    pub fn metadata_line(&self) -> String {
        let mut s = format!("# gpsl {}", self.command);
        for (k, v) in &self.values {
            s.push(' ');
            s.push_str(k);
            s.push('=');
            s.push_str(v);
        }
        s
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Evenly spaced grid lo, lo + step, ..., hi, rounded to 12 decimals.
pub fn grid(lo: f64, hi: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && hi >= lo) {
        return Err(CliError::Usage(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(CliError::Usage(format!("grid has {n} points")));
    }
    Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// `n` evenly spaced points covering [lo, hi].
pub fn linspace(lo: f64, hi: f64, n: usize) -> CliResult<Vec<f64>> {
    if n < 2 || !(hi > lo) {
        return Err(CliError::Usage(format!("need >= 2 points on a nonempty interval, got {n} on [{lo}, {hi}]")));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}
