use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smc_cli::commands::{self, GlobalOpts, Verbosity};

/// Multi-agent spectral coverage simulator.
#[derive(Parser)]
#[command(name = "smc", version, about, max_term_width = 100)]
struct Cli {
    /// Output directory for artifacts (default: $SMC_OUT_DIR, else ./out)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print nothing but errors
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Also print defaulted scenario fields and per-member details
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; write trajectory CSV, SVG plot, and summary JSON
    Run {
        /// Scenario TOML file
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Override the scenario's master seed
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Run seeded variations of a scenario and summarize the ensemble
    Ensemble {
        /// Scenario TOML file
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Number of members (seeds are master XOR index)
        #[arg(long, value_name = "M", default_value_t = 16)]
        ensemble: u32,
        /// Override the scenario's master seed
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Evaluate the checks declared in a scenario's analyses list
    Analyze {
        /// Scenario TOML file
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Override the scenario's master seed
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Re-run a bundled figure scenario and verify its claims
    Reproduce {
        /// One of: fig1a, fig1b, fig2a, fig2b
        #[arg(long, value_name = "ID")]
        figure: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("SMC_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let verbosity = if cli.quiet {
        Verbosity::Quiet
    } else if cli.verbose {
        Verbosity::Verbose
    } else {
        Verbosity::Normal
    };
    let opts = GlobalOpts { out_dir, verbosity };

    let result = match &cli.command {
        Command::Run { scenario, seed } => commands::cmd_run(&opts, scenario, *seed),
        Command::Ensemble { scenario, ensemble, seed } => {
            commands::cmd_ensemble(&opts, scenario, *ensemble, *seed)
        }
        Command::Analyze { scenario, seed } => commands::cmd_analyze(&opts, scenario, *seed),
        Command::Reproduce { figure } => commands::cmd_reproduce(&opts, figure),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
