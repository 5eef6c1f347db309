use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hslab::config::load_config;
use hslab::runner::{resolution_override, run_command, Command};
use hslab::Error;

/// Weighted Hardy-Steklov operator laboratory.
#[derive(Parser, Debug)]
#[command(name = "hslab", version)]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and the CSV tables; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// x node count; the y count is twice that.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VERIFY: u8 = 4;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error [{}]: {e}", e.code());
    ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERIC })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("HSLAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // ignore a pool that is already set up
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let mut cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(n) = cli.resolution {
        match resolution_override(n) {
            Ok(r) => cfg.resolution = r,
            Err(e) => return fail(&e),
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let report = match run_command(cli.command, &cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let written = match &cli.out {
        Some(dir) => report.write_dir(dir),
        None => report.to_json().map(|s| println!("{s}")),
    };
    if let Err(e) = written {
        return fail(&e);
    }
    for c in &report.checks {
        eprintln!("{:<28} {:?}  {}", c.name, c.status, c.detail);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}
