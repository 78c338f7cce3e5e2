use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hfric_cli::{run, Command, Report, RunConfig, EXIT_CLAIM, EXIT_OK};

/// Numerical laboratory for a tracer particle coupled to a Schrödinger field.
#[derive(Parser)]
#[command(name = "hfric", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV files.
    #[arg(long, global = true, default_value = "hfric-out")]
    out: PathBuf,
    /// Coarse grids and short horizons.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Correlations, the small-k law of G and the memory kernel K.
    Kernels,
    /// The admissible decay interval and the best-decay equations.
    Interval,
    /// Decay of the linearized friction law.
    Linear,
    /// The nonlinear effective dynamics.
    Simulate,
    /// The fixed-point reformulation against direct integration.
    FixedPoint,
    /// The coupled particle-field system against the effective law.
    Oracle,
    /// Bound constants of the contraction argument.
    Audit,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Kernels => Command::Kernels,
            Sub::Interval => Command::Interval,
            Sub::Linear => Command::Linear,
            Sub::Simulate => Command::Simulate,
            Sub::FixedPoint => Command::FixedPoint,
            Sub::Oracle => Command::Oracle,
            Sub::Audit => Command::Audit,
        }
    }
}

fn execute(cli: &Cli) -> hfric_cli::Result<Report> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let report = run(cli.command.into(), &cfg, cli.quick)?;
    report.write(&cli.out)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            for c in &report.checks {
                let tag = if c.pass { "PASS" } else { "FAIL" };
                eprintln!("{tag} {} = {:e} ({}): {}", c.key, c.value, c.relation, c.claim);
            }
            eprintln!("wrote {}", cli.out.join(format!("{}.json", report.command)).display());
            ExitCode::from(if report.passed { EXIT_OK } else { EXIT_CLAIM } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
