//! `qtensor`: batch driver for potential tables, minimization and
//! regularity diagnostics.
//!
//! Exit codes: 0 success, 2 configuration or domain error, 3 convergence
//! failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qtensor", version, about = "Maier-Saupe Q-tensor minimization and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the data-parallel loops.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `bulk.quad_order`.
    #[arg(long)]
    quad_order: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Slice {
    Uniaxial,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate f_ms at a point, along a slice or over the eigenvalue simplex.
    Potential {
        #[command(flatten)]
        common: Common,
        /// Evaluate at z = (Q11, Q12, Q13, Q22, Q23).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        /// Evaluate along a one-parameter family.
        #[arg(long, value_enum)]
        slice: Option<Slice>,
        /// Largest order parameter of the slice.
        #[arg(long, default_value_t = 0.99)]
        s_max: f64,
        /// Slice rows, or simplex subdivisions.
        #[arg(long, default_value_t = 30)]
        n: usize,
        /// Print the bulk normalization constant.
        #[arg(long)]
        b0: bool,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
    },
    /// Minimize the energy described by a configuration.
    Minimize {
        #[command(flatten)]
        common: Common,
    },
    /// Replacement, Morrey and Hölder scans on a stored field.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Field file written by `minimize`.
        #[arg(long)]
        field: PathBuf,
    },
    /// Check a configuration and list every failing key.
    ValidateConfig {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Potential { common, at, slice, s_max, n, b0, kappa } => {
            commands::setup_threads(common.threads).and_then(|_| commands::potential(&common.into(), at, slice.is_some(), s_max, n, b0, kappa))
        }
        Command::Minimize { common } => commands::setup_threads(common.threads).and_then(|_| commands::minimize(&common.into())),
        Command::Diagnose { common, field } => commands::setup_threads(common.threads).and_then(|_| commands::diagnose(&common.into(), &field)),
        Command::ValidateConfig { common } => commands::validate_config(&common.into()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qtensor: {f}");
            ExitCode::from(f.code())
        }
    }
}

impl From<Common> for commands::Overrides {
    fn from(c: Common) -> Self {
        commands::Overrides { config: c.config, out: c.out, seed: c.seed, quad_order: c.quad_order }
    }
}
