//! The `hfric` experiment runner as a library, so tests can drive it in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::run;
pub use config::RunConfig;
pub use error::{CliError, Result, EXIT_CLAIM, EXIT_IO, EXIT_OK, EXIT_VALIDATION};
pub use report::{Artifact, Check, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Kernels,
    Interval,
    Linear,
    Simulate,
    FixedPoint,
    Oracle,
    Audit,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Kernels,
        Command::Interval,
        Command::Linear,
        Command::Simulate,
        Command::FixedPoint,
        Command::Oracle,
        Command::Audit,
    ];

    /// The subcommand name, also the stem of its JSON report.
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::Interval => "interval",
            Command::Linear => "linear",
            Command::Simulate => "simulate",
            Command::FixedPoint => "fixed-point",
            Command::Oracle => "oracle",
            Command::Audit => "audit",
        }
    }
}
