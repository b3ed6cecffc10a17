//! `acnf` command-line front end.
//!
//! Exit codes: 0 ok, 2 configuration, 3 input file, 4 evaluator or
//! protocol, 5 degenerate termination.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "acnf", version, about = "Search network / framework / compression combinations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a search and write its report and run state.
    Search(Box<SearchArgs>),
    /// Continue a saved run.
    Resume(ResumeArgs),
    /// Check an oracle CSV or a space file.
    Validate(ValidateArgs),
    /// Run protocol conformance checks against an evaluator command.
    ProtocolCheck(ProtocolArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlphaModeArg {
    Fixed,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Once,
    PerPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvaluatorArg {
    Oracle,
    Synthetic,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Debug, Args)]
struct ConfigFlags {
    /// JSON search configuration; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Iteration budget k.
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    alpha_mode: Option<AlphaModeArg>,
    /// Reference score for `--alpha-mode fixed`.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    update_policy: Option<PolicyArg>,
    #[arg(long)]
    clamp_min: Option<f64>,
    #[arg(long)]
    clamp_max: Option<f64>,
    #[arg(long)]
    failure_factor: Option<f64>,
    #[arg(long)]
    floor: Option<f64>,
    /// Re-evaluate combinations that were already evaluated.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Debug, Args)]
struct EvaluatorFlags {
    #[arg(long, value_enum)]
    evaluator: Option<EvaluatorArg>,
    /// Oracle CSV; the bundled table when omitted.
    #[arg(long, value_name = "FILE")]
    oracle: Option<PathBuf>,
    /// JSON landscape for the synthetic evaluator.
    #[arg(long, value_name = "FILE")]
    landscape: Option<PathBuf>,
    /// Seed of the synthetic landscape; defaults to `--seed`.
    #[arg(long)]
    landscape_seed: Option<u64>,
    /// Evaluator child command.
    #[arg(long, value_name = "CMD")]
    external_cmd: Option<String>,
    /// Argument passed to the evaluator child; repeatable.
    #[arg(long = "external-arg", value_name = "ARG", allow_hyphen_values = true)]
    external_args: Vec<String>,
    /// Per-request timeout for the evaluator child, in seconds.
    #[arg(long)]
    timeout_s: Option<f64>,
}

#[derive(Debug, Args)]
struct OutputFlags {
    /// Run-state file to write.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report file to write.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Report format; inferred from the report extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// JSON search space; inferred from the oracle when omitted.
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,
    #[arg(long, default_value_t = acnf::evaluators::oracle::DEFAULT_INPUT_SIZE)]
    input_size: u32,
    #[command(flatten)]
    config: ConfigFlags,
    #[command(flatten)]
    evaluator: EvaluatorFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Stop after this many iterations, leaving the run resumable.
    #[arg(long, value_name = "N")]
    stop_after: Option<u64>,
}

#[derive(Debug, Args)]
struct ResumeArgs {
    /// Run-state file written by `search --out`.
    run: PathBuf,
    /// Add N iterations to the budget.
    #[arg(long, value_name = "N")]
    extend: Option<u64>,
    /// Oracle CSV to use instead of the one recorded in the run.
    #[arg(long, value_name = "FILE")]
    oracle: Option<PathBuf>,
    #[arg(long)]
    timeout_s: Option<f64>,
    /// Where to write the updated run; the input file when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_name = "N")]
    stop_after: Option<u64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Oracle CSV; the bundled table when neither file is given.
    #[arg(long, value_name = "FILE")]
    oracle: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    #[arg(long, value_name = "CMD")]
    external_cmd: String,
    #[arg(long = "external-arg", value_name = "ARG", allow_hyphen_values = true)]
    external_args: Vec<String>,
    #[arg(long, default_value_t = 5.0)]
    timeout_s: f64,
    #[arg(long, default_value_t = acnf::evaluators::oracle::DEFAULT_INPUT_SIZE)]
    input_size: u32,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Search(args) => commands::search(*args),
        Command::Resume(args) => commands::resume(args),
        Command::Validate(args) => commands::validate(args),
        Command::ProtocolCheck(args) => commands::protocol_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("acnf: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
