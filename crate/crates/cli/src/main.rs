use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use syk_teleport::config::{ExperimentConfig, ExperimentKind};
use syk_teleport::experiments;
use syk_teleport::propagation::Scheme;

#[derive(Parser)]
#[command(name = "syk-teleport", version, about = "Driven SYK wormhole teleportation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity against drive amplitude at fixed frequency.
    AmplitudeScan(Common),
    /// Fidelity against drive frequency at fixed amplitude.
    FreqScan(Common),
    /// Right-boundary chirp during readout: fidelity peak shift and strain response.
    Chirp(Common),
    /// Thermal OTOCs and scrambling delay.
    Otoc(Common),
    /// Fixed-calibration versus re-optimized fidelity over (epsilon, omega).
    ReoptMap(Common),
    /// Per-size optimum with and without drive.
    Scaling(Common),
    /// Integrator error against step size.
    Convergence(Common),
    /// Grid search for the undriven operating point.
    Calibrate(Common),
    /// Print the default configuration as TOML.
    DefaultConfig,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; realization r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Disorder realizations.
    #[arg(long)]
    n_avg: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Base propagation step in 1/J.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Lt,
    Strang,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(n) = self.n_avg {
            cfg.n_avg = Some(n);
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(dt) = self.dt {
            cfg.propagator.dt_base = dt;
        }
        if let Some(s) = self.scheme {
            cfg.propagator.scheme = match s {
                SchemeArg::Lt => Scheme::LieTrotter,
                SchemeArg::Strang => Scheme::StrangMidpoint,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(kind: ExperimentKind, common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .context("configuring the worker pool")?;
    info!("running {kind} (config {})", cfg.hash());
    let table = experiments::run(kind, &cfg).with_context(|| format!("{kind} failed"))?;
    let written = table.persist(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join(format!("{kind}.config.toml")), cfg.to_toml()?)
        .with_context(|| format!("writing config copy into {}", cfg.output_dir.display()))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::AmplitudeScan(c) => run(ExperimentKind::AmplitudeScan, c),
        Command::FreqScan(c) => run(ExperimentKind::FreqScan, c),
        Command::Chirp(c) => run(ExperimentKind::Chirp, c),
        Command::Otoc(c) => run(ExperimentKind::Otoc, c),
        Command::ReoptMap(c) => run(ExperimentKind::ReoptMap, c),
        Command::Scaling(c) => run(ExperimentKind::Scaling, c),
        Command::Convergence(c) => run(ExperimentKind::Convergence, c),
        Command::Calibrate(c) => run(ExperimentKind::Calibrate, c),
        Command::DefaultConfig => ExperimentConfig::default().to_toml().map(|t| print!("{t}")).map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
