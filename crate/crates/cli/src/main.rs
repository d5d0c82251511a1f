//! hsect — inspect, verify, and simulate affine submersion geometries.

mod report;
mod run;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use run::Failure;

#[derive(Parser)]
#[command(name = "hsect", version, about = "harmonic-section toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in geometries and what they promise.
    List {
        /// Also print each entry's sections and expectation table.
        #[arg(long)]
        verbose: bool,
    },
    /// Run structural checks and classify sections.
    Verify(VerifyArgs),
    /// Monte-Carlo experiments along horizontal Brownian paths.
    Simulate(SimulateArgs),
    /// Discrete tension flow on the product circle bundle.
    Flow(FlowArgs),
    /// Print a built-in geometry as a definition file.
    Export {
        /// Built-in geometry name.
        name: String,
        /// Write to this path instead of stdout.
        #[arg(short, long)]
        out: Option<String>,
    },
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Built-in geometry name or path to a definition file.
    geometry: String,
    /// Section to classify: a declared name, or one expression per fiber
    /// coordinate (repeat the flag). Defaults to every declared section.
    #[arg(long)]
    section: Vec<String>,
    /// Perturb one connection coefficient of a built-in geometry by this
    /// amount before checking.
    #[arg(long)]
    broken: Option<f64>,
    /// Residual tolerance for pass/fail checks.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Sample points per domain sweep.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Whether a skew-symmetry violation fails the run or only warns.
    #[arg(long, value_enum, default_value_t = SkewPolicy::Warn)]
    skew_policy: SkewPolicy,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    json: Option<String>,
    /// Write a flat CSV of check and section rows here.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SkewPolicy {
    Warn,
    Fail,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Built-in geometry name or path to a definition file.
    geometry: String,
    /// Section(s) to test, as in `verify`.
    #[arg(long)]
    section: Vec<String>,
    /// First-order form coefficients, one per total-space coordinate.
    /// Defaults to the vertical coframe of the geometry's lift.
    #[arg(long)]
    form: Vec<String>,
    /// Number of Brownian paths.
    #[arg(long, default_value_t = 1000)]
    paths: usize,
    /// Time step.
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Time horizon.
    #[arg(long = "T", default_value_t = 0.5)]
    horizon: f64,
    /// RNG seed; falls back to HSECT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Start point as comma-separated base coordinates; defaults to the
    /// domain midpoint.
    #[arg(long)]
    x0: Option<String>,
    /// Pathwise agreement tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    json: Option<String>,
    /// Write a flat CSV of experiment rows here.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(clap::Args)]
struct FlowArgs {
    /// Geometry; only the built-in `product` entry is supported.
    #[arg(default_value = "product")]
    geometry: String,
    /// Initial section as an expression in x1.
    #[arg(long, default_value = "sin(x1)")]
    section: String,
    /// Grid points around the circle.
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// Time step (stable below half the squared grid spacing).
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Number of flow steps.
    #[arg(long, default_value_t = 5000)]
    steps: usize,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    json: Option<String>,
    /// Write a step,energy CSV here.
    #[arg(long)]
    csv: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match &cli.command {
        Command::List { verbose } => run::list(*verbose),
        Command::Verify(args) => run::verify(args),
        Command::Simulate(args) => run::simulate(args),
        Command::Flow(args) => run::flow(args),
        Command::Export { name, out } => run::export(name, out),
    };
    eprintln!("wall-clock: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
