use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use moment_closure::cli::{exit_code, run, Command, RunConfig, EXIT_INVALID, EXIT_SOLVER};

/// Linear moment-closure solver and experiment runner.
#[derive(Parser, Debug)]
#[command(name = "momclose", version)]
struct Args {
    /// One of: nodes, system, solve-moments, solve-kinetic, solve-bgk,
    /// convergence, stability, bgk-limit, validate.
    command: String,
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 = one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overrides the closure order from the config.
    #[arg(long)]
    order: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command: Command = match args.command.parse() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("momclose: {e}");
            return ExitCode::from(EXIT_INVALID as u8);
        }
    };
    let mut cfg = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match RunConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("momclose: {}: {e}", path.display());
                    return ExitCode::from(EXIT_INVALID as u8);
                }
            },
            Err(e) => {
                eprintln!("momclose: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_INVALID as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(order) = args.order {
        cfg.order = order;
    }
    let out = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("momclose: thread pool: {e}");
            return ExitCode::from(EXIT_SOLVER as u8);
        }
    };
    match pool.install(|| run(command, &cfg, &out)) {
        Ok(output) => {
            println!("{}", serde_json::to_string_pretty(&output.summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("momclose: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
