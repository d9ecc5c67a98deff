//! The `qstack` command line: compile, run, calibrate, schedule and draw
//! over the JSON formats of the core and pulse crates.
//!
//! Each subcommand produces one primary document, written to `--output` or
//! standard output, and optionally a JSON report. The report goes to
//! standard output when `--output` is set and to standard error otherwise.
//! Failures print `{"error": {...}}` on standard error and exit with the
//! code of [`ErrorKind`].

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod target;

pub use commands::{
    calibrate, compile, draw, run, schedule, CompileReport, Output, RunRequest, StageReport,
};
pub use target::TargetDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    InvalidInput,
    Resource,
    Calibration,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::InvalidInput => 2,
            ErrorKind::Resource => 3,
            ErrorKind::Calibration => 4,
            ErrorKind::Internal => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ErrorKind::InvalidInput => "invalid_input",
            ErrorKind::Resource => "resource",
            ErrorKind::Calibration => "calibration",
            ErrorKind::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::InvalidInput, message)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {"kind": self.kind.name(), "message": self.message, "exit_code": self.kind.exit_code()}
        })
        .to_string()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qstack",
    version,
    about = "Quantum circuit compiler, simulator and pulse toolchain"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the primary output here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Progress notes on standard error.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose, map and translate a circuit for a target device.
    Compile {
        circuit: PathBuf,
        target: PathBuf,
        /// Refinement passes of the placement search.
        #[arg(long, default_value_t = 3)]
        passes: usize,
    },
    /// Simulate a circuit: sample, take an expectation value or dump the state.
    Run {
        circuit: PathBuf,
        #[arg(long, default_value = "dense", value_parser = ["dense", "sparse"])]
        mode: String,
        #[arg(long)]
        shots: Option<u64>,
        /// Observable JSON for an exact expectation value.
        #[arg(long)]
        observable: Option<PathBuf>,
        #[arg(long)]
        dump: bool,
        /// Qubits to sample or dump; all by default.
        #[arg(long, value_delimiter = ',')]
        qubits: Option<Vec<usize>>,
    },
    /// Calibrate a synthetic device and write its calibration table.
    Calibrate {
        device: PathBuf,
        /// Directory for the per-step sweep CSVs.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Lower a native circuit to a pulse schedule.
    Schedule {
        native: PathBuf,
        calibration: PathBuf,
        /// Sample period in seconds.
        #[arg(long, default_value_t = 0.5e-9)]
        dt: f64,
        /// Replay the schedule and report the distance to the circuit unitary.
        #[arg(long)]
        verify: bool,
    },
    /// Text diagram of a circuit.
    Draw { circuit: PathBuf },
}

pub(crate) fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| CliError::input(format!("standard input: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Runs one parsed invocation.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let log = |msg: &str| {
        if cli.verbose {
            eprintln!("qstack: {msg}");
        }
    };
    match &cli.command {
        Command::Compile {
            circuit,
            target,
            passes,
        } => {
            log("compiling");
            commands::compile_files(circuit, target, *passes)
        }
        Command::Run {
            circuit,
            mode,
            shots,
            observable,
            dump,
            qubits,
        } => {
            let req = RunRequest {
                mode: mode.parse().map_err(CliError::input)?,
                shots: *shots,
                observable: observable.as_deref().map(read_input).transpose()?,
                dump: *dump,
                qubits: qubits.clone(),
                seed: cli.seed,
            };
            log("simulating");
            run(&read_input(circuit)?, &req)
        }
        Command::Calibrate { device, csv_dir } => {
            let dir = csv_dir.clone().or_else(|| {
                cli.output.as_ref().map(|o| {
                    let stem = o
                        .file_stem()
                        .map_or("calibration".into(), |s| s.to_string_lossy().into_owned());
                    o.with_file_name(format!("{stem}_sweeps"))
                })
            });
            log("calibrating");
            let out = calibrate(&read_input(device)?, cli.seed)?;
            if let Some(dir) = dir {
                commands::write_sweeps(&dir, &out.sweeps)?;
                log(&format!(
                    "wrote {} sweeps to {}",
                    out.sweeps.len(),
                    dir.display()
                ));
            }
            Ok(out.output)
        }
        Command::Schedule {
            native,
            calibration,
            dt,
            verify,
        } => {
            log("scheduling");
            schedule(
                &read_input(native)?,
                &read_input(calibration)?,
                *dt,
                *verify,
            )
        }
        Command::Draw { circuit } => draw(&read_input(circuit)?),
    }
}

fn write_out(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::new(ErrorKind::Internal, format!("{}: {e}", path.display())))
}

/// Parses `args`, executes, prints, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", CliError::input(e.to_string().trim_end()).to_json());
            return ErrorKind::InvalidInput.exit_code();
        }
    };
    // A closed pipe downstream is not an error of ours.
    let say = |text: &str| {
        let _ = writeln!(std::io::stdout(), "{text}");
    };
    let note = |text: &str| {
        let _ = writeln!(std::io::stderr(), "{text}");
    };
    let result = execute(&cli).and_then(|out| {
        match &cli.output {
            Some(p) => {
                write_out(p, &out.primary)?;
                if let Some(r) = &out.report {
                    say(r);
                }
            }
            None => {
                say(out.primary.trim_end());
                if let Some(r) = &out.report {
                    note(r);
                }
            }
        }
        Ok(out)
    });
    match result {
        Ok(out) => out.exit_code,
        Err(e) => {
            note(&e.to_json());
            e.kind.exit_code()
        }
    }
}
