//! Command-line pipelines for the cut finite element Biot solver.

pub mod commands;
pub mod config;

use cutbiot_core::Error;
use serde::Serialize;

pub use commands::{cmd_convergence, cmd_solve, cmd_sweep, CommonOpts};
pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_GEOMETRY: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                Error::Config(_) => "config",
                Error::Parameter(_) => "parameter",
                Error::Layout(_) => "layout",
                Error::Assembly(_) => "assembly",
                Error::Solver { .. } => "solver",
                Error::GeometryResolution { .. } | Error::GeometryConflict { .. } => "geometry",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                Error::Config(_) | Error::Parameter(_) => EXIT_CONFIG,
                Error::Solver { .. } | Error::Layout(_) | Error::Assembly(_) => EXIT_SOLVER,
                Error::GeometryResolution { .. } | Error::GeometryConflict { .. } => EXIT_GEOMETRY,
            },
        }
    }

    /// Machine-readable error report.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            status: &'a str,
            kind: &'a str,
            exit_code: i32,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            pivot: Option<usize>,
        }
        let pivot = match self {
            CliError::Core(Error::Solver { pivot, .. }) => *pivot,
            _ => None,
        };
        serde_json::to_string(&Report {
            status: "error",
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            pivot,
        })
        .expect("error report serializes")
    }
}
