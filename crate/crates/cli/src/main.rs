use clap::{Parser, Subcommand};
use gpsl_cli::commands;
use gpsl_cli::config::{parse_assignment, RunConfig};
use gpsl_cli::output::OutDir;
use gpsl_cli::{CliError, CliResult};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gpsl", version, about = "GPSL collapse-model numerics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Flat `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (beats GPSL_SEED and the config file)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a config key
    #[arg(short = 's', long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved config and exit
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// F̃(d̃) curve with its small- and large-d̃ fits
    Ftilde,
    /// Single-particle decoherence rates for GPSL, TD-CSL and TD-DP
    Decoherence,
    /// Rigid-sphere kernels, balance radius and optional full rates
    Sphere,
    /// Average pair force F̃_G with asymptotes and symmetry checks
    Force,
    /// Newtonian field covariance table
    Covariance,
    /// Two-site trajectory ensemble against the analytic decay rate
    Simulate,
    /// Oracle suite over closed forms, identities and null checks
    Check,
    /// List the config keys of a command
    Keys { command: String },
}

impl Cmd {
    fn name(&self) -> &str {
        match self {
            Cmd::Ftilde => "ftilde",
            Cmd::Decoherence => "decoherence",
            Cmd::Sphere => "sphere",
            Cmd::Force => "force",
            Cmd::Covariance => "covariance",
            Cmd::Simulate => "simulate",
            Cmd::Check => "check",
            Cmd::Keys { .. } => "keys",
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Cmd::Keys { command } = &cli.command {
        let (_, keys, _) = commands::lookup(command).ok_or_else(|| CliError::Usage(format!("unknown command {command:?}")))?;
        for (k, d, help) in keys {
            println!("{k:<16} {:<20} {help}", if d.is_empty() { "(unset)" } else { d });
        }
        return Ok(());
    }
    let (name, keys, runner) = commands::lookup(cli.command.name()).expect("every subcommand is registered");
    let mut flags = Vec::new();
    if let Some(s) = cli.seed {
        flags.push(("seed".to_string(), s.to_string()));
    }
    for a in &cli.set {
        flags.push(parse_assignment(a)?);
    }
    let env_seed = std::env::var("GPSL_SEED").ok();
    let cfg = RunConfig::resolve(name, keys, cli.config.as_deref(), env_seed.as_deref(), &flags)?;
    if cli.print_config {
        for (k, v) in cfg.entries() {
            println!("{k} = {v}");
        }
        return Ok(());
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.into()))?;
    }
    let mut out = OutDir::create(&cli.out, &cfg)?;
    let result = runner(&cfg, &mut out);
    for p in out.written() {
        println!("wrote {}", p.display());
    }
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpsl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
