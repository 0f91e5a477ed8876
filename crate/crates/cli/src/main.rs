use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sqzengine::config::SCHEMA_HELP;
use sqzengine::{CliError, Experiment, Overrides, RunConfig};
use sqzengine_core::engine::EngineKind;

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum EngineArg {
    Fock,
    Moments,
}

/// Squeezed-light cavity engine simulator.
#[derive(Debug, Parser)]
#[command(name = "sqzengine", version, after_long_help = format!("{EXIT_CODES}\n{SCHEMA_HELP}"))]
struct Args {
    /// Experiment to run; defaults to the config's "experiment" key.
    #[arg(value_enum)]
    experiment: Option<Experiment>,
    /// JSON config file, or a sidecar JSON from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// State representation (overrides engine.engine).
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Largest time step (overrides engine.dt).
    #[arg(long)]
    dt: Option<f64>,
}

const EXIT_CODES: &str =
    "EXIT CODES\n  0 ok, 2 config, 3 infeasible, 4 no convergence, 5 I/O, 6 validation failed\n";

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sqzengine: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: Args) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply(&Overrides {
        experiment: args.experiment,
        out: args.out,
        engine: args.engine.map(|e| match e {
            EngineArg::Fock => EngineKind::Fock,
            EngineArg::Moments => EngineKind::Moments,
        }),
        dt: args.dt,
    });
    sqzengine::run(&cfg)
}
