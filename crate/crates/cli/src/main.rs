mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use brandmarket::Schedule;

#[derive(Debug, Parser)]
#[command(name = "brandmarket", version, about = "Price equilibria for spatial competition with a brand effect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Roundrobin,
    Simultaneous,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Roundrobin => Schedule::RoundRobin,
            ScheduleArg::Simultaneous => Schedule::Simultaneous,
        }
    }
}

#[derive(Debug, Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Solver {
    /// Convergence tolerance on price changes (default 1e-8 * price_upper).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Roundrobin)]
    schedule: ScheduleArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a scenario file.
    Validate { scenario: PathBuf },
    /// Market cells, areas and neighbours at the scenario's prices.
    Cells {
        scenario: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Best response of one company to the scenario's prices.
    BestResponse {
        scenario: PathBuf,
        #[arg(long)]
        company: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Iterated best response from the scenario's prices.
    Equilibrium {
        scenario: PathBuf,
        #[command(flatten)]
        solver: Solver,
        /// Extra random starting points besides the scenario's prices.
        #[arg(long, default_value_t = 0)]
        multi_start: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Re-verify the prices of a saved report instead of solving.
        #[arg(long)]
        verify: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Re-solve the equilibrium over a range of beta, warm-starting each step.
    SweepBeta {
        scenario: PathBuf,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 31)]
        steps: usize,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// Compare analytic areas (and optionally best responses) with the grid oracle.
    OracleCheck {
        scenario: PathBuf,
        /// Grid cell edge as a fraction of the longest window edge.
        #[arg(long, default_value_t = 1e-3)]
        grid_res: f64,
        /// Also compare best responses on this many price samples.
        #[arg(long)]
        price_samples: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Draw the market partition as SVG.
    Render {
        scenario: PathBuf,
        /// Take prices from a saved equilibrium report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {}", e.name(), e);
            ExitCode::from(e.exit_code())
        }
    }
}
