use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cspath_cli::{execute, Command, Format, Invocation};

#[derive(Parser)]
#[command(name = "cspath", version, about = "Coherent-state propagator of the driven harmonic oscillator")]
struct Args {
    #[command(subcommand)]
    command: Sub,
    /// JSON run config; read from standard input when absent
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Overrides options.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides options.tol
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Closed-form kernel, g and h for the configured query
    Kernel,
    /// Path independence, unitarity, Schrödinger, composition and Fock checks
    Verify,
    /// Lattice N-sweep and Fock dt-sweep with fitted orders
    Converge,
    /// Kernel over the Cartesian grid in the `sweep` section
    Sweep,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation {
        command: match args.command {
            Sub::Kernel => Command::Kernel,
            Sub::Verify => Command::Verify,
            Sub::Converge => Command::Converge,
            Sub::Sweep => Command::Sweep,
        },
        config: args.config,
        format: match args.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        },
        seed: args.seed,
        tol: args.tol,
    };
    let run = execute(&inv, std::io::stdin().lock());
    for line in &run.diagnostics {
        eprintln!("{line}");
    }
    let written = match &args.out {
        Some(path) => std::fs::write(path, &run.output),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(run.output.as_bytes()).and_then(|_| stdout.flush())
        }
    };
    if let Err(e) = written {
        eprintln!("cspath: cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(run.exit_code as u8)
}
