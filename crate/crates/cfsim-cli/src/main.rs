//! Command-line front end for the cell-free MIMO downlink simulator.

mod config;
mod output;
mod run;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "cfsim",
    about = "Scheduling and beamforming simulator for non-coherent user-centric cell-free MIMO downlinks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, clap::Args)]
struct CommonArgs {
    /// TOML config file; omitted keys use the full-scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the campaign master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scheme: proposed | zf-rr | conj-rr | zf-opt.
    #[arg(long)]
    scheme: Option<String>,
    /// Override the CSI mode: PI | PEAR.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory (falls back to $CFSIM_OUT, then the config file).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-slot fairness campaign and write metrics.
    Campaign {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump the first realization's geometry (and pilots) as JSON.
        #[arg(long)]
        dump_network: bool,
    },
    /// Record one solver run (objective and per-RRH diagnostics per iteration).
    Trace {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the pilot length or the scheme on paired seeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep axis: taup | scheme.
        #[arg(long, default_value = "scheme")]
        axis: String,
    },
}

fn effective_config(common: &CommonArgs) -> Result<(config::ExperimentConfig, PathBuf)> {
    let mut cfg = config::load_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(scheme) = &common.scheme {
        config::parse_scheme(scheme)?;
        cfg.scheme = scheme.clone();
    }
    if let Some(mode) = &common.mode {
        config::parse_mode(mode)?;
        cfg.mode = mode.clone();
    }
    // output dir precedence: --out, then $CFSIM_OUT, then the config file
    let out_dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os("CFSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    cfg.out_dir = out_dir.display().to_string();
    cfg.to_sim_config()?.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((cfg, out_dir))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let digest = match &cli.command {
        Command::Campaign { common, dump_network } => {
            let (cfg, out_dir) = effective_config(common)?;
            run::campaign(&cfg, &out_dir, *dump_network)?
        }
        Command::Trace { common } => {
            let (cfg, out_dir) = effective_config(common)?;
            run::trace(&cfg, &out_dir)?
        }
        Command::Sweep { common, axis } => {
            let (cfg, out_dir) = effective_config(common)?;
            match axis.as_str() {
                "taup" => run::sweep_taup(&cfg, &out_dir)?,
                "scheme" => run::sweep_scheme(&cfg, &out_dir)?,
                other => anyhow::bail!("unknown sweep axis '{other}' (expected taup | scheme)"),
            }
        }
    };
    println!("{digest}");
    Ok(())
}
