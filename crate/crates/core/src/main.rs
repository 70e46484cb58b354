use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pcurve::cli::{self, Command, SeriesParams};

/// Exact combinatorial cohomology of skeletons of p-adic curves, plus a
/// truncated p-adic Laurent series engine. All reports are JSON on stdout.
#[derive(Parser)]
#[command(name = "pcurve", version, about)]
struct CliArgs {
    #[command(subcommand)]
    command: TopCommand,
}

#[derive(Subcommand)]
enum TopCommand {
    /// Cohomology ranks, torsion and bases of a graph over a coefficient ring.
    Cohomology {
        /// Graph JSON file.
        file: PathBuf,
        /// Coefficient ring: Q, Z, or Z/n.
        #[arg(long, default_value = "Q")]
        ring: String,
    },
    /// Filtration report of H¹ for a patron.
    Filtration {
        /// Patron JSON file.
        file: PathBuf,
        /// Theory: etale:<ell>, hk, dr, or dagger.
        #[arg(long)]
        theory: String,
    },
    /// Monodromy operator on the associated graded for a patron.
    Monodromy {
        /// Patron JSON file.
        file: PathBuf,
        /// Theory: etale:<ell>, hk, dr, or dagger.
        #[arg(long)]
        theory: String,
    },
    /// Stable model of the special fiber of a patron.
    Stabilize {
        /// Patron JSON file.
        file: PathBuf,
    },
    /// Genus of the curve a patron encodes.
    Genus {
        /// Patron JSON file.
        file: PathBuf,
    },
    /// Check the patron invariants.
    Validate {
        /// Patron JSON file.
        file: PathBuf,
    },
    /// Truncated Laurent series operations.
    #[command(subcommand)]
    Series(SeriesCommand),
}

#[derive(Args)]
struct SeriesFlags {
    /// Prime p.
    #[arg(long)]
    p: u64,
    /// Ramification index e (coefficients in Q(p^{1/e})).
    #[arg(long, default_value_t = 1)]
    ram: u32,
    /// Working precision M (rational, coefficients known mod valuation >= M).
    #[arg(long, default_value = "12")]
    prec: String,
    /// Coefficients as "n:value,n:value" with scalar values like "3/2+1/4*pi".
    #[arg(long, allow_hyphen_values = true)]
    coeffs: String,
    /// Window bottom (defaults to the smallest given exponent).
    #[arg(long, allow_negative_numbers = true)]
    nmin: Option<i64>,
    /// Window top (defaults to the largest given exponent).
    #[arg(long, allow_negative_numbers = true)]
    nmax: Option<i64>,
}

impl SeriesFlags {
    fn into_params(self) -> SeriesParams {
        SeriesParams {
            p: self.p,
            ram: self.ram,
            prec: self.prec,
            coeffs: self.coeffs,
            n_min: self.nmin,
            n_max: self.nmax,
        }
    }
}

#[derive(Subcommand)]
enum SeriesCommand {
    /// Canonical unit factorization u = c·T^k·u₊·u₋.
    Factor {
        #[command(flatten)]
        flags: SeriesFlags,
    },
    /// Residue of ω = (coefficient series)·dT/T.
    Residue {
        #[command(flatten)]
        flags: SeriesFlags,
    },
    /// Coefficient series of du/u against dT/T.
    Dlog {
        #[command(flatten)]
        flags: SeriesFlags,
    },
    /// Restrict a leg form to a boundary circle (T₁T₂ = p^μ).
    Leg {
        #[command(flatten)]
        flags: SeriesFlags,
        /// Leg length μ (positive rational in (1/e)·Z).
        #[arg(long)]
        mu: String,
        /// Boundary side, 1 or 2.
        #[arg(long)]
        side: u8,
    },
}

fn to_command(cmd: TopCommand) -> Command {
    match cmd {
        TopCommand::Cohomology { file, ring } => Command::GraphCohomology { file, ring },
        TopCommand::Filtration { file, theory } => Command::Filtration { file, theory },
        TopCommand::Monodromy { file, theory } => Command::Monodromy { file, theory },
        TopCommand::Stabilize { file } => Command::Stabilize { file },
        TopCommand::Genus { file } => Command::Genus { file },
        TopCommand::Validate { file } => Command::Validate { file },
        TopCommand::Series(series) => match series {
            SeriesCommand::Factor { flags } => {
                Command::SeriesFactor { params: flags.into_params() }
            }
            SeriesCommand::Residue { flags } => {
                Command::SeriesResidue { params: flags.into_params() }
            }
            SeriesCommand::Dlog { flags } => Command::SeriesDlog { params: flags.into_params() },
            SeriesCommand::Leg { flags, mu, side } => {
                Command::SeriesLeg { params: flags.into_params(), mu, side }
            }
        },
    }
}

fn main() -> ExitCode {
    let args = CliArgs::parse();
    match cli::run(&to_command(args.command)) {
        Ok(value) => {
            println!("{}", value);
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
