//! Command-line front end: runs declarative experiment configs, emits the
//! default template, and validates configs without running them.
//!
//! Set `SWAN_ISAC_LOG=debug` for progress details on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swan_isac::experiment::{parse_config, run_experiment, RunOptions};
use swan_isac::tdma::FloorRule;

#[derive(Parser)]
#[command(name = "swan-isac", version, about = "Segmented-waveguide pinching-antenna ISAC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV and manifest.
    Run {
        /// Path to the experiment configuration file.
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Size of the worker pool (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Convert rate floors to SNR floors without the TDMA prefactor.
        #[arg(long)]
        paper_literal_floors: bool,
    },
    /// Print an annotated default configuration to stdout.
    DefaultConfig,
    /// Parse and validate a config without running it.
    Validate {
        config: PathBuf,
    },
}

fn log_enabled() -> bool {
    std::env::var("SWAN_ISAC_LOG")
        .map(|v| {
            let v = v.to_ascii_lowercase();
            v == "debug" || v == "info" || v == "1"
        })
        .unwrap_or(false)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out, threads, paper_literal_floors } => {
            if let Some(t) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                    eprintln!("error: could not size the worker pool: {e}");
                    return ExitCode::FAILURE;
                }
            }
            let options = RunOptions {
                seed,
                output: out,
                floor_rule: paper_literal_floors.then_some(FloorRule::PaperLiteral),
            };
            if log_enabled() {
                eprintln!("running {}", config.display());
            }
            match run_experiment(&config, &options) {
                Ok(summary) => {
                    if log_enabled() {
                        eprintln!("{} rows in {} ms", summary.rows, summary.wall_ms);
                    }
                    println!(
                        "wrote {} ({} rows); manifest {}",
                        summary.output.display(),
                        summary.rows,
                        summary.manifest.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::DefaultConfig => {
            print!("{}", swan_isac::experiment::default_config_template());
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match std::fs::read_to_string(&config) {
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", config.display());
                ExitCode::FAILURE
            }
            Ok(text) => match parse_config(&text) {
                Ok(cfg) => {
                    println!(
                        "ok: {} experiment, seed {}, output {}",
                        cfg.kind.name(),
                        cfg.seed,
                        cfg.output.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("invalid config: {e}");
                    ExitCode::FAILURE
                }
            },
        },
    }
}
