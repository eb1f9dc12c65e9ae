use std::path::PathBuf;
use std::process::ExitCode;

use blackboard::SchedulerPolicy;
use blackboard_cli::{run, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "blackboard", version, about = "Property analyses over mini-IR programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the selected analyses for one program.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Program in the JSON mini-IR format.
    program: PathBuf,
    /// Comma-separated analysis names.
    #[arg(long, value_delimiter = ',', required = true)]
    analyses: Vec<String>,
    /// fifo, lifo, dependers-first or random.
    #[arg(long, default_value = "fifo")]
    scheduler: SchedulerPolicy,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
    /// Abort on non-monotone updates instead of logging them.
    #[arg(long)]
    check_monotonicity: bool,
    /// Also run the reference evaluator and fail on any difference.
    #[arg(long)]
    oracle_compare: bool,
    /// Results file; standard output if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the activation trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .init();
    let Command::Run(args) = Cli::parse().command;
    let config = RunConfig {
        program_path: args.program,
        analyses: args.analyses,
        scheduler: args.scheduler,
        workers: args.workers.into(),
        check_monotonicity: args.check_monotonicity,
        oracle_compare: args.oracle_compare,
        output_path: args.output,
        trace_path: args.trace,
    };
    let code = run(&config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
