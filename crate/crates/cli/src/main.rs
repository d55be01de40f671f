use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rro_core::overhead::FormulaMode;
use rro_core::sensitivity::ParamDelta;

use rro_cli::commands::{self, CompareOptions, SimOptions};
use rro_cli::error::Result;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Literal,
    Tiered,
}

impl From<ModeArg> for FormulaMode {
    fn from(mode: ModeArg) -> FormulaMode {
        match mode {
            ModeArg::Literal => FormulaMode::Literal,
            ModeArg::Tiered => FormulaMode::Tiered,
        }
    }
}

#[derive(Parser)]
#[command(name = "rro", about = "Reactive routing overhead: model and simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the overhead breakdown for each row of a parameters file.
    Model {
        params_file: String,
        /// Override the RREQ tier-factor interpretation for every row.
        #[arg(long, value_enum)]
        formula_mode: Option<ModeArg>,
    },
    /// Partial derivatives and total differentials, all methods side by side.
    Sensitivity {
        params_file: String,
        #[arg(long, default_value_t = 0.0)]
        dn: f64,
        #[arg(long, default_value_t = 0.0)]
        dh: f64,
        #[arg(long, default_value_t = 0.0)]
        dlifetime: f64,
        #[arg(long, default_value_t = 0.0)]
        dinterval: f64,
        #[arg(long, value_enum)]
        formula_mode: Option<ModeArg>,
    },
    /// Run one scenario (builtin name or JSON file) and print the report.
    Sim {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// aodv, dsr, dymo or custom:<profile.json>
        #[arg(long, default_value = "aodv")]
        protocol: String,
        /// Output directory for the JSON report, CSV row and trace.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the full event trace as JSON lines.
        #[arg(long)]
        trace: bool,
    },
    /// Run a value x seed x protocol grid and print plot-ready CSV.
    Sweep {
        sweep_file: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model-predicted control counts next to simulated ones.
    Compare {
        scenario: String,
        params_file: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "aodv")]
        protocol: String,
        /// Compare even though the scenario has node mobility.
        #[arg(long)]
        allow_mobile: bool,
        #[arg(long, value_enum)]
        formula_mode: Option<ModeArg>,
    },
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Model {
            params_file,
            formula_mode,
        } => commands::cmd_model(&params_file, formula_mode.map(Into::into)),
        Command::Sensitivity {
            params_file,
            dn,
            dh,
            dlifetime,
            dinterval,
            formula_mode,
        } => {
            let delta = ParamDelta {
                dn,
                dh,
                dlifetime,
                dinterval,
            };
            commands::cmd_sensitivity(&params_file, delta, formula_mode.map(Into::into))
        }
        Command::Sim {
            scenario,
            seed,
            protocol,
            out,
            trace,
        } => commands::cmd_sim(
            &scenario,
            &SimOptions {
                seed,
                protocol,
                out,
                trace,
            },
        ),
        Command::Sweep { sweep_file, out } => commands::cmd_sweep(&sweep_file, out),
        Command::Compare {
            scenario,
            params_file,
            seed,
            protocol,
            allow_mobile,
            formula_mode,
        } => commands::cmd_compare(
            &scenario,
            &params_file,
            &CompareOptions {
                seed,
                protocol,
                allow_mobile,
                mode: formula_mode.map(Into::into),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
