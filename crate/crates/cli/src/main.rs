mod decompose;
mod propagate;
mod run_config;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use madelung_core::grid::Boundary;
use madelung_core::Error;

#[derive(Parser)]
#[command(name = "madelung", version, about = "Madelung fields, quantum potential and propagation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the scenario catalog as JSON lines.
    List,
    /// Run one scenario, or `all`, and write reports plus field dumps.
    Scenario {
        name: String,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// `dotted.key=value`, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Split a wave-function CSV into `x,rho,phi,q,mask`.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Density floor as a fraction of the maximum density.
        #[arg(long, default_value_t = 1e-12)]
        floor: f64,
        #[arg(long, value_enum, default_value_t = BoundaryArg::Dirichlet)]
        boundary: BoundaryArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Propagate the initial state of a TOML run configuration.
    Propagate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `method` key of the configuration.
        #[arg(long, value_enum)]
        method: Option<run_config::Route>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        compare: Option<CompareArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Periodic,
    Dirichlet,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => Boundary::Periodic,
            BoundaryArg::Dirichlet => Boundary::Dirichlet,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareArg {
    Exact,
}

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Computation ran but the science did not hold up.
    Scientific(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Scientific(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Scientific(m) | Failure::Usage(m) => m,
        }
    }
}

fn is_scientific(e: &Error) -> bool {
    match e {
        Error::Scenario { source, .. } => is_scientific(source),
        Error::BelowFloor { .. }
        | Error::Instability { .. }
        | Error::UnresolvedStates { .. }
        | Error::TrajectoryEscaped { .. }
        | Error::Caustic { .. }
        | Error::BranchFolding { .. }
        | Error::BasisNotOrthonormal { .. }
        | Error::TruncationDeficit { .. } => true,
        _ => false,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_scientific(&e) {
            Failure::Scientific(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::List => scenario::list(),
        Command::Scenario { name, out, overrides } => scenario::run(&name, &out, &overrides),
        Command::Decompose {
            input,
            hbar,
            mass,
            floor,
            boundary,
            out,
        } => decompose::run(&input, hbar, mass, floor, boundary.into(), &out),
        Command::Propagate {
            config,
            method,
            out,
            compare,
        } => propagate::run(&config, method, &out, compare.is_some()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
