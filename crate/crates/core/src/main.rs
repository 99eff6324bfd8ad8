use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nonexpansive::cli::{main_with, Command, Format, Invocation};

#[derive(Parser, Debug)]
#[command(name = "nonexpansive", version, about = "Fixed points, variational inequalities and Fredholm equations")]
struct Args {
    #[command(subcommand)]
    command: Cmd,

    /// INI config file with [problem], [grid], [solver] and [output] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Solve even when neither existence condition holds.
    #[arg(long, global = true)]
    override_conditions: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Evaluate the existence conditions of an integral equation.
    Check,
    /// Solve an integral equation, or a vi/kkm scenario.
    Solve,
    /// Solve a built-in variational inequality scenario.
    Vi,
    /// Verify a built-in KKM scenario.
    Kkm,
    /// Run the acceptance suite.
    Selftest,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Table,
    Keyvalue,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = match args.command {
        Cmd::Check => Command::Check,
        Cmd::Solve => Command::Solve,
        Cmd::Vi => Command::Vi,
        Cmd::Kkm => Command::Kkm,
        Cmd::Selftest => Command::Selftest,
    };
    let inv = Invocation {
        config: args.config,
        seed: args.seed,
        output: args.output,
        format: args.format.map(|f| match f {
            FormatArg::Table => Format::Table,
            FormatArg::Keyvalue => Format::KeyValue,
        }),
        override_conditions: args.override_conditions,
    };
    ExitCode::from(main_with(command, &inv).code() as u8)
}
