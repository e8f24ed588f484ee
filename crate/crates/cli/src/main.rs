use std::path::PathBuf;
use std::process::ExitCode;

use catbranch::config::{load_config, RunConfig};
use catbranch::presets;
use catbranch::run::{init_threads_from_env, run, run_classical};
use catbranch::verify::{verify, VerifyOptions};
use catbranch::Error;
use clap::{Args, Parser, Subcommand};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "catbranch", version, about = "Cat-state decoherence in coupled oscillator networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Configuration file (a summary.txt from an earlier run also works)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset with default settings
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Full run: snapshots, interference series, classical ensemble
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Output directory (overrides the config)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical trajectories, branching and crossings only
    Classical {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the closed-form results against brute-force oracles
    Verify {
        #[command(flatten)]
        source: Source,
        /// Include the full-dimensional split-operator comparison (slow)
        #[arg(long)]
        grid3d: bool,
    },
    /// List the built-in presets
    Presets,
}

fn load(source: &Source) -> Result<RunConfig, Error> {
    match (&source.config, &source.preset) {
        (Some(path), _) => load_config(path),
        (None, Some(name)) => RunConfig::preset(name),
        (None, None) => unreachable!("clap requires one source"),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Parse(_) | Error::Validation(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_NUMERICAL),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads_from_env();
    match cli.command {
        Command::Presets => {
            for name in presets::NAMES {
                println!("{name:<10} {}", presets::describe(name).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Command::Simulate { source, out } => {
            let cfg = match load(&source) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match run(&cfg, out.as_deref()) {
                Ok(r) => {
                    println!(
                        "mean i_max {:.6e}, retention {:.4}, mean B {:.6e}, {} crossings",
                        r.correlation.mean_i_max,
                        r.interference_retention(),
                        r.branches.mean_b,
                        r.branches.crossing_count()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Classical { source, out } => {
            let cfg = match load(&source) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match run_classical(&cfg, out.as_deref()) {
                Ok(r) => {
                    println!("mean B {:.6e}, {} crossings", r.mean_b, r.crossing_count());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Verify { source, grid3d } => {
            let cfg = match load(&source) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match verify(&cfg, VerifyOptions { grid3d }) {
                Ok(report) => {
                    print!("{report}");
                    if report.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_VERIFY)
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}
