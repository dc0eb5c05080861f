use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seclend_harness::{execute, Experiment, ExperimentSpec, Format, HarnessError};

#[derive(Parser)]
#[command(
    name = "seclend",
    version,
    about = "Run share-lending allocation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Oracle, tail-sum and truthfulness checks on small random instances.
    Verify(RunArgs),
    /// Ascending auction against the exhaustive optimum.
    Auction(RunArgs),
    /// Private counter and private auction experiments.
    Privauc(RunArgs),
    /// Multi-round play with strategic clients.
    Simulate(RunArgs),
    /// The two-client withdrawal example under greedy allocation.
    Example1(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Master seed, overriding the experiment file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the experiment file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Trial count, overriding the experiment file.
    #[arg(long)]
    trials: Option<usize>,
    /// Also write non-private traces (counter values, auction transcript).
    #[arg(long)]
    diagnostic: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Auction(_) => "auction",
            Command::Privauc(_) => "privauc",
            Command::Simulate(_) => "simulate",
            Command::Example1(_) => "example1",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Verify(a)
            | Command::Auction(a)
            | Command::Privauc(a)
            | Command::Simulate(a)
            | Command::Example1(a) => a,
        }
    }

    fn accepts(&self, experiment: &Experiment) -> bool {
        matches!(
            (self, experiment),
            (
                Command::Verify(_),
                Experiment::OracleEquivalence(_)
                    | Experiment::TailIdentity(_)
                    | Experiment::Truthfulness(_)
            ) | (Command::Auction(_), Experiment::AuctionWelfare(_))
                | (
                    Command::Privauc(_),
                    Experiment::CounterUsefulness(_) | Experiment::PrivaucWelfare(_)
                )
                | (Command::Simulate(_), Experiment::Multiround(_))
                | (Command::Example1(_), Experiment::Example1(_))
        )
    }
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let args = cli.command.args();
    let mut spec = ExperimentSpec::load(&args.spec)?;
    if !cli.command.accepts(&spec.experiment) {
        return Err(HarnessError::KindMismatch {
            command: cli.command.name(),
            kind: spec.experiment.kind(),
        });
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(out) = &args.out {
        spec.out = Some(out.clone());
    }
    if let Some(format) = args.format {
        spec.format = format;
    }
    if let Some(trials) = args.trials {
        spec.trials = Some(trials);
    }
    let report = execute(&spec, args.diagnostic)?;
    print!("{}", report.summary());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
