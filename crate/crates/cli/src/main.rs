mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mot_core::{Rational, Scalar};

use failure::Failure;

/// Robust prices and semi-static superhedges for options on the average of
/// a martingale with fixed initial and terminal laws.
#[derive(Debug, Parser)]
#[command(name = "mot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the auxiliary problem and report the value, optimizer and dual pair.
    Price {
        #[command(flatten)]
        inputs: Inputs,
        /// Also write `x,u_mu,u_theta,u_nu` on the grid.
        #[arg(long)]
        potentials_csv: Option<PathBuf>,
    },
    /// Build the superhedge and check it on the optimizer's coupling paths.
    Hedge {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        clock: Clock,
        /// `asian`, `fixed:<t0>`, `european:<T'>` or `terminal-half`.
        #[arg(long = "A", default_value = "asian")]
        averaging: String,
        /// Shift `psi` by this constant before checking.
        #[arg(long, allow_hyphen_values = true)]
        perturb_dual: Option<String>,
        #[arg(long)]
        slack_csv: Option<PathBuf>,
    },
    /// Compare a risk reversal or butterfly closed form with the LP.
    ClosedForm {
        #[command(flatten)]
        marginals: Marginals,
        #[command(flatten)]
        output: Output,
        #[arg(long = "type", value_enum)]
        kind: ClosedFormKind,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        h: Option<String>,
        #[arg(long, default_value_t = 1)]
        grid_refine: usize,
    },
    /// Reproduce the built-in counterexamples.
    Counterexamples {
        /// Also write a JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asian price gap to theta(f) for several n, as CSV on stdout or in `--out`.
    Convergence {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_delimiter = ',', default_value = "4,16,64,256")]
        n_list: Vec<usize>,
        #[arg(long = "T", default_value = "1")]
        horizon: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClosedFormKind {
    RiskReversal,
    Butterfly,
}

#[derive(Debug, Args)]
struct Marginals {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    /// Rational arithmetic throughout.
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, Args)]
struct Output {
    /// Print the JSON report instead of writing it to a file.
    #[arg(long)]
    stdout: bool,
    /// Report file; defaults to `<command>-report.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Inputs {
    #[command(flatten)]
    marginals: Marginals,
    #[command(flatten)]
    output: Output,
    #[arg(long)]
    payoff: PathBuf,
    /// Rounds of midpoint insertion in the grid.
    #[arg(long, default_value_t = 1)]
    grid_refine: usize,
}

#[derive(Debug, Args)]
struct Clock {
    /// The first jump of the embedded paths happens at `1/n`.
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long = "T", default_value = "1")]
    horizon: String,
}

fn dispatch<S: Scalar>(command: Command) -> Result<(), Failure> {
    let tol = failure::tolerance::<S>()?;
    match command {
        Command::Price { inputs, potentials_csv } => commands::price::<S>(&inputs, potentials_csv.as_deref(), &tol),
        Command::Hedge { inputs, clock, averaging, perturb_dual, slack_csv } => commands::hedge::<S>(
            &inputs,
            &clock,
            &averaging,
            perturb_dual.as_deref(),
            slack_csv.as_deref(),
            &tol,
        ),
        Command::ClosedForm { marginals, output, kind, a, b, h, grid_refine } => {
            commands::closed_form::<S>(&marginals, &output, kind, &a, b.as_deref(), h.as_deref(), grid_refine, &tol)
        }
        Command::Convergence { inputs, n_list, horizon } => commands::convergence::<S>(&inputs, &n_list, &horizon),
        Command::Counterexamples { out } => commands::counterexamples(out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exact = match &cli.command {
        Command::Price { inputs, .. } | Command::Hedge { inputs, .. } | Command::Convergence { inputs, .. } => {
            inputs.marginals.exact
        }
        Command::ClosedForm { marginals, .. } => marginals.exact,
        Command::Counterexamples { .. } => false,
    };
    let outcome = if exact { dispatch::<Rational>(cli.command) } else { dispatch::<f64>(cli.command) };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
