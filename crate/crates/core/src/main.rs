//! Batch driver for lattice walks and their discrete geometry.
//!
//! ```text
//! dqw-geom <config.toml> [--mode <name>] [--out <dir>] [--quiet]
//! ```
//!
//! Exit codes: 0 success, 2 config error, 3 runtime numeric error. Fatal
//! errors print a machine-readable JSON object to stderr. The environment
//! variable `DQW_GEOM_THREADS` caps the per-site worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dqw_geom::config::{ModeName, RunConfig};
use dqw_geom::runner::run_mode;

#[derive(Parser, Debug)]
#[command(
    name = "dqw-geom",
    version,
    about = "Two-step lattice walks and their discrete geometry"
)]
struct Args {
    /// Path to the TOML run configuration.
    config: PathBuf,
    /// Override the [mode] name from the config.
    #[arg(long)]
    mode: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress notes on stdout.
    #[arg(long)]
    quiet: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let report = serde_json::json!({ "error_kind": kind, "message": message });
    eprintln!("{report}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = Args::parse();

    if let Ok(threads) = std::env::var("DQW_GEOM_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                // Ignore the error if a pool already exists.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                return fail(
                    "config",
                    format!("DQW_GEOM_THREADS must be a positive integer, got `{threads}`"),
                    EXIT_CONFIG,
                );
            }
        }
    }

    let mut cfg = match RunConfig::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => return fail("config", e.to_string(), EXIT_CONFIG),
    };
    if let Some(mode) = &args.mode {
        match mode.parse::<ModeName>() {
            Ok(name) => cfg.mode.name = name,
            Err(e) => return fail("config", e, EXIT_CONFIG),
        }
        // Re-validate under the overridden mode.
        let violations = cfg.validate();
        if !violations.is_empty() {
            return fail("config", violations.join("\n"), EXIT_CONFIG);
        }
    }
    if let Some(dir) = args.out {
        cfg.output.dir = Some(dir);
    }

    match run_mode(&cfg) {
        Ok(summary) => {
            if !args.quiet {
                for file in &summary.files {
                    println!("wrote {}", file.display());
                }
                for note in &summary.notes {
                    println!("{note}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail("runtime", e.to_string(), EXIT_RUNTIME),
    }
}
