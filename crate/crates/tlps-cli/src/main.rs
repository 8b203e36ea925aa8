//! `tlps` — command-line front end for the two-level processor-sharing
//! queue toolkit. Every subcommand emits deterministic CSV (UTF-8, comma
//! separated, LF endings, 12 significant digits).

mod args;
mod commands;
mod error;
mod output;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "tlps",
    version,
    about = "Analysis toolkit for two-level processor-sharing queues with hyper-exponential job sizes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate mean sojourn time against the service threshold
    Curve(commands::CurveArgs),
    /// Sweep the power-law phase family over phase counts
    Table(commands::TableArgs),
    /// Closed-form two-phase analysis with gain breakdown
    Twophase(commands::TwophaseArgs),
    /// Cross-validate analytic values by discrete-event simulation
    Simulate(commands::SimulateArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(args) => commands::curve(args),
        Command::Table(args) => commands::table(args),
        Command::Twophase(args) => commands::twophase(args),
        Command::Simulate(args) => commands::simulate(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
