//! Config ingestion, subcommand dispatch and result emission for the
//! `cspath` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod record;

use std::io::Read;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{cmd_converge, cmd_kernel, cmd_sweep, cmd_verify, cmd_verify_with};
pub use config::RunConfig;
pub use record::{ResultRecord, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cspath_core::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Kernel,
    Verify,
    Converge,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Verify => "verify",
            Command::Converge => "converge",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything the binary was asked to do.
#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub command: Command,
    /// `None` reads the config from standard input.
    pub config: Option<PathBuf>,
    pub format: Format,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// Rendered output, diagnostics for the error stream, and the exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub output: String,
    pub diagnostics: Vec<String>,
    pub exit_code: i32,
}

/// Reads and resolves the config, applying command-line overrides.
pub fn load_config(inv: &Invocation, stdin: impl Read) -> Result<RunConfig, CliError> {
    let (text, base_dir) = match &inv.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (text, dir)
        }
        None => {
            let mut text = String::new();
            let mut stdin = stdin;
            stdin
                .read_to_string(&mut text)
                .map_err(|e| CliError::Config(format!("cannot read standard input: {e}")))?;
            (text, PathBuf::from("."))
        }
    };
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(seed) = inv.seed {
        cfg.options.seed = seed;
    }
    if let Some(tol) = inv.tol {
        cfg.options.tol = tol;
    }
    cfg.resolve(&base_dir)
}

pub fn execute(inv: &Invocation, stdin: impl Read) -> Execution {
    let command = inv.command.name();
    if inv.format == Format::Csv && matches!(inv.command, Command::Kernel | Command::Verify) {
        let msg = format!("--format csv applies to sweep and converge only, not {command}");
        return failure(command, None, CliError::Usage(msg));
    }
    let cfg = match load_config(inv, stdin) {
        Ok(cfg) => cfg,
        Err(e) => return failure(command, None, e),
    };
    let (output, status) = match inv.command {
        Command::Kernel => single(cmd_kernel(&cfg)),
        Command::Verify => single(cmd_verify(&cfg)),
        Command::Converge => output::converge(&cmd_converge(&cfg), inv.format),
        Command::Sweep => output::sweep(&cmd_sweep(&cfg), inv.format),
    };
    let diagnostics = match status {
        Status::Error => vec![format!("cspath {command}: failed, see the error record")],
        _ => Vec::new(),
    };
    Execution {
        output,
        diagnostics,
        exit_code: status.exit_code(),
    }
}

fn single(rec: ResultRecord) -> (String, Status) {
    (rec.to_json_line() + "\n", rec.status)
}

fn failure(command: &str, cfg: Option<RunConfig>, e: CliError) -> Execution {
    let message = e.to_string();
    let rec = ResultRecord::error(command, cfg, message.clone());
    Execution {
        output: rec.to_json_line() + "\n",
        diagnostics: vec![format!("cspath {command}: {message}")],
        exit_code: Status::Error.exit_code(),
    }
}
