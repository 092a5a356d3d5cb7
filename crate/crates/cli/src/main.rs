use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod export;
mod run;
mod selftest;

/// Exit status for a failed expectation or missing artifact.
pub const EXIT_FAILURE: u8 = 1;
/// Exit status for usage, parse and configuration errors.
pub const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "endqt", version, about = "Seeded scenario runner for environmental determinacy simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run(RunArgs),
    /// Print the chain DOT snapshot at time `t` from a run directory.
    ExportChain {
        dir: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Run every scenario and oracle check at reduced trial counts.
    Selftest {
        #[arg(long)]
        json: bool,
        /// Inject a known defect to check that the suite catches it.
        #[arg(long, value_enum)]
        mutate: Option<selftest::Mutation>,
    },
}

#[derive(Args)]
pub struct RunArgs {
    /// toy-sdc, wigners-friend, interferometer or epr-bell.
    pub scenario: Option<String>,
    #[arg(long = "scenario", conflicts_with = "scenario")]
    pub scenario_flag: Option<String>,
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Parent directory for the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long, conflicts_with = "open")]
    pub isolated: bool,
    #[arg(long)]
    pub open: bool,
    #[arg(long, conflicts_with = "no_d3")]
    pub d3: bool,
    #[arg(long)]
    pub no_d3: bool,
    /// prob, det-chancy or det-hv.
    #[arg(long)]
    pub mode: Option<String>,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
    /// Dotted config override, e.g. `--set stability.window_length=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run::cmd_run(&args),
        Command::ExportChain { dir, t } => export::cmd_export_chain(&dir, t),
        Command::Selftest { json, mutate } => selftest::cmd_selftest(json, mutate),
    };
    ExitCode::from(code)
}
