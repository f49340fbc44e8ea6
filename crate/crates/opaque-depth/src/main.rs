//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opaque_depth::commands::{self, SweepSteps};

#[derive(Parser)]
#[command(
    name = "opaque-depth",
    about = "Upper bounds on the opaque serial depth of neural-network architectures",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure one architecture config and print a depth report.
    Analyze {
        /// Path to an architecture config (JSON).
        config: PathBuf,
        /// Sequence length (defaults to the config's maximum).
        #[arg(long)]
        seq_len: Option<u64>,
        /// Emit the unoptimized circuit instead of the depth-minimal one.
        #[arg(long)]
        no_folding: bool,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Depth across a sequence-length range, optionally as CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        t_min: u64,
        #[arg(long)]
        t_max: u64,
        /// Grid shape: powers-of-two or linear.
        #[arg(long, default_value = "powers-of-two")]
        t_steps: String,
        /// Write `T,depth,formula_depth,match` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reproduce the bundled family tables.
    Report {
        #[arg(long, default_value = "gemma3")]
        family: String,
    },
    /// Print the critical path of an architecture as labeled stages.
    Path {
        config: PathBuf,
        #[arg(long)]
        seq_len: Option<u64>,
        /// Also list the N-1 next-deepest sinks.
        #[arg(long, default_value_t = 1)]
        top: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            config,
            seq_len,
            no_folding,
            json,
        } => commands::cmd_analyze(&config, seq_len, no_folding, json),
        Command::Sweep {
            config,
            t_min,
            t_max,
            t_steps,
            csv,
        } => {
            let steps = match t_steps.as_str() {
                "powers-of-two" => SweepSteps::PowersOfTwo,
                "linear" => SweepSteps::Linear,
                other => {
                    eprintln!("error: unknown step mode `{other}` (powers-of-two | linear)");
                    return ExitCode::from(2);
                }
            };
            commands::cmd_sweep(&config, t_min, t_max, steps, csv.as_deref()).map(
                |(result, summary)| {
                    let mut out = result.to_csv();
                    out.push_str(&summary);
                    out
                },
            )
        }
        Command::Report { family } => commands::cmd_report(&family),
        Command::Path {
            config,
            seq_len,
            top,
        } => commands::cmd_path(&config, seq_len, top),
    };

    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
