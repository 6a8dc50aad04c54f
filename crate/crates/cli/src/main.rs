//! Command line front end. All physics lives in the library; this binary
//! parses flags, loads the config file, and dispatches.

mod config;
mod run;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "planewave",
    about = "Exact and first-order-corrected plane-wave plasma solutions, \
             test-particle runs, and the slingshot energy estimate",
    version
)]
struct Cli {
    /// Path to the run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for CSV tables and summaries.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Worker threads for batch runs; 0 keeps the library default.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,

    /// Override the phase-table tolerance from the config file.
    #[arg(long, global = true, value_name = "X")]
    tolerance: Option<f64>,

    /// Override the validity threshold for "much less than".
    #[arg(long = "threshold-T", global = true, value_name = "X")]
    threshold_t: Option<f64>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the pulse phase functions Y3, Xi and V3.
    Pulse,
    /// Exact trajectories of initially resting plasma electrons.
    ZeroDensity,
    /// Longitudinal magnetic force and its ponderomotive form.
    Ponderomotive,
    /// A charge with arbitrary initial conditions in a travelling wave.
    TestParticle {
        /// Propagation direction as "x,y,z" (overrides the config).
        #[arg(long, value_name = "X,Y,Z", allow_hyphen_values = true)]
        direction: Option<String>,
        /// Initial velocity in units of c as "x,y,z" (overrides the config).
        #[arg(long, value_name = "X,Y,Z", allow_hyphen_values = true)]
        beta0: Option<String>,
        /// Initial position in cm as "x,y,z" (overrides the config).
        #[arg(long, value_name = "X,Y,Z", allow_hyphen_values = true)]
        x0: Option<String>,
    },
    /// First-order density correction profile along the pulse phase.
    Correction,
    /// Slingshot energy estimate with validity and geometry checks.
    Slingshot,
    /// Brute-force field integration with conservation residuals.
    Oracle,
    /// Check the configured setup against the library's exact identities.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Pulse => run::Command::Pulse,
        Cmd::ZeroDensity => run::Command::ZeroDensity,
        Cmd::Ponderomotive => run::Command::Ponderomotive,
        Cmd::TestParticle { direction, beta0, x0 } => {
            run::Command::TestParticle { direction, beta0, x0 }
        }
        Cmd::Correction => run::Command::Correction,
        Cmd::Slingshot => run::Command::Slingshot,
        Cmd::Oracle => run::Command::Oracle,
        Cmd::Validate => run::Command::Validate,
    };
    let request = run::Request {
        command,
        config_path: cli.config,
        out: cli.out,
        threads: cli.threads,
        tolerance: cli.tolerance,
        threshold_t: cli.threshold_t,
    };
    ExitCode::from(run::execute(request))
}
