use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hourglass_cli::commands::{cmd_balance, cmd_learn, cmd_simulate, cmd_sweep, cmd_traps, load_patterns};
use hourglass_cli::commands::{SimulateOptions, SweepSpec};
use hourglass_cli::{init_thread_pool, CliResult, ExperimentConfig};
use hourglass_core::patterns::Realization;

/// Like `println!`, but a closed stdout (say, piped into `head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "hourglass", version, about = "Simulate and analyse hourglass networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write frequencies, a report and the silent pattern.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a (w_I, w_E) grid with replications.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the traps of a network with their patterns.
    Traps {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn block connections that store a pattern family.
    Learn {
        #[arg(short, long)]
        patterns: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long = "A")]
        coef_a: f64,
        #[arg(long = "B")]
        coef_b: f64,
        #[arg(long, value_enum, default_value = "deterministic")]
        realization: RealizationArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check the rate balance of the checkerboard subsystem.
    Balance {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long = "wE")]
        w_e: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RealizationArg {
    Deterministic,
    Exponential,
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    init_thread_pool()?;
    Ok(match cli.command {
        Command::Simulate { config, seed, horizon, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let o = cmd_simulate(&cfg, &SimulateOptions { seed, horizon, out })?;
            say!(
                "heuristic verdict: {:?}; silent sites: {:?}",
                o.report.heuristic.verdict, o.report.heuristic.silent
            );
            o.files
        }
        Command::Sweep { config, out } => {
            let spec = SweepSpec::load(&config)?;
            let o = cmd_sweep(&spec, out.as_deref())?;
            say!("{} runs over {} cells", o.runs.len(), o.summary.cells.len());
            o.files
        }
        Command::Traps { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let o = cmd_traps(&cfg, out.as_deref())?;
            for t in &o.report.traps {
                say!("{:>3} {}", t.index, t.ascii);
            }
            o.files
        }
        Command::Learn { patterns, a, coef_a, coef_b, realization, out } => {
            let pats = load_patterns(&patterns)?;
            let r = match realization {
                RealizationArg::Deterministic => Realization::Deterministic,
                RealizationArg::Exponential => Realization::Exponential,
            };
            let o = cmd_learn(pats, a, coef_a, coef_b, r, &out)?;
            say!("verify_storage: {}", o.report.verify_storage);
            o.files
        }
        Command::Balance { config, w_e, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let o = cmd_balance(&cfg, w_e, out.as_deref())?;
            say!("residual: {}", o.report.balance.residual);
            o.files
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                say!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
