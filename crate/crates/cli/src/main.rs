mod commands;
mod error;
mod problem;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Covariance, Input, Outcome, SimulateArgs};
use error::CliError;

/// Bias-aware design criteria, design games, backdoor adjustment, SEM
/// simulation, and covariate balance from JSON problem files.
#[derive(Parser)]
#[command(name = "bias-design", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON; `balance` also accepts a CSV of units).
    #[arg(long)]
    input: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Moment blocks and A/D/Q1 criteria of a design.
    Criteria {
        #[command(flatten)]
        common: Common,
        /// Set every component of ψ to this value.
        #[arg(long, allow_hyphen_values = true)]
        psi: Option<f64>,
    },
    /// Equilibria of the α/β design game.
    Nash {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        psi: Option<f64>,
        /// Starting points as `a,b;a,b;...`.
        #[arg(long)]
        starts: Option<String>,
    },
    /// Backdoor admissibility or minimal adjustment sets.
    Backdoor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cause: Option<String>,
        #[arg(long)]
        effect: Option<String>,
        /// Comma-separated adjustment set; an empty string is the empty set.
        #[arg(long)]
        set: Option<String>,
    },
    /// Simulate a linear SEM and optionally fit OLS.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        /// Where to write the simulated CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Intervention `NODE=VALUE`; repeatable.
        #[arg(long = "do", value_name = "NODE=VALUE", allow_hyphen_values = true)]
        interventions: Vec<String>,
        /// Response followed by regressors.
        #[arg(long, num_args = 1.., value_name = "RESP REG")]
        fit: Option<Vec<String>>,
    },
    /// Two-group balance: bias term, moment matrix, strata, pairing.
    Balance {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        psi: Option<f64>,
        /// Report a greedy Mahalanobis pairing.
        #[arg(long)]
        pair: bool,
        /// `identity` or a headerless CSV covariance matrix.
        #[arg(long)]
        cov: Option<String>,
    },
    /// Randomization minimax over a finite assignment game.
    Minimax {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_starts(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = || CliError::Input(format!("--starts: expected `a,b;a,b;...`, got `{text}`"));
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (a, b) = pair.split_once(',').ok_or_else(bad)?;
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok((a, b))
        })
        .collect()
}

fn parse_intervention(text: &str) -> Result<(String, f64), CliError> {
    let bad = || CliError::Input(format!("--do: expected NODE=VALUE, got `{text}`"));
    let (node, value) = text.split_once('=').ok_or_else(bad)?;
    let value: f64 = value.trim().parse().map_err(|_| bad())?;
    if !value.is_finite() {
        return Err(bad());
    }
    Ok((node.trim().to_string(), value))
}

fn check_finite(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !x.is_finite() => Err(CliError::Input(format!("--{name} must be finite"))),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(Outcome, Option<PathBuf>), CliError> {
    match cli.command {
        Command::Criteria { common, psi } => {
            check_finite("psi", psi)?;
            let input = Input::read(&common.input)?;
            Ok((commands::criteria(&input, psi)?, common.out))
        }
        Command::Nash { common, psi, starts } => {
            check_finite("psi", psi)?;
            let starts = starts.as_deref().map(parse_starts).transpose()?;
            let input = Input::read(&common.input)?;
            Ok((commands::nash(&input, psi, starts)?, common.out))
        }
        Command::Backdoor { common, cause, effect, set } => {
            let set = set.map(|s| {
                s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
            });
            let input = Input::read(&common.input)?;
            Ok((commands::backdoor(&input, cause, effect, set)?, common.out))
        }
        Command::Simulate { input, out, n, seed, interventions, fit } => {
            let interventions =
                interventions.iter().map(|s| parse_intervention(s)).collect::<Result<_, _>>()?;
            let input = Input::read(&input)?;
            let args = SimulateArgs { n, seed, interventions, fit, csv_out: out };
            Ok((commands::simulate_cmd(&input, args)?, None))
        }
        Command::Balance { common, psi, pair, cov } => {
            check_finite("psi", psi)?;
            let cov = cov.map(|c| match c.as_str() {
                "identity" => Covariance::Identity,
                path => Covariance::File(PathBuf::from(path)),
            });
            let input = Input::read(&common.input)?;
            Ok((commands::balance(&input, psi, pair, cov)?, common.out))
        }
        Command::Minimax { common } => {
            let input = Input::read(&common.input)?;
            Ok((commands::minimax(&input)?, common.out))
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    let message = err.to_string().replace('\n', " ");
    eprintln!("error: {}: {message}", err.category());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, out) = match run(cli) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let text = outcome.report.render();
    match &out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                return fail(&CliError::io(path, e));
            }
        }
        None => print!("{text}"),
    }
    match &outcome.failure {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}
