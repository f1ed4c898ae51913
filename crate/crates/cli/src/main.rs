mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use args::Cli;
use output::{write_manifest, RunManifest, Timer};

const AUDIT_FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;
const ENGINE_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let resolved = match config::merged(&cli).and_then(config::resolve) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error: --threads must be positive");
            return ExitCode::from(CONFIG_ERROR);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("engine error: {e}");
            return ExitCode::from(ENGINE_ERROR);
        }
    }
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|t| t.as_secs())
        .unwrap_or(0);
    let mut timer = Timer::start();
    let outcome = match commands::run(&resolved, &mut timer) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("engine error: {e:#}");
            return ExitCode::from(ENGINE_ERROR);
        }
    };
    let dir = &resolved.out_dir;
    let digests = match outcome.outputs.write(dir) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("engine error: {e:#}");
            return ExitCode::from(ENGINE_ERROR);
        }
    };
    timer.lap("write");
    let status = if outcome.holds { 0 } else { AUDIT_FAILED };
    let manifest = RunManifest {
        code_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        config: resolved.config.clone(),
        threads: rayon::current_num_threads(),
        started_unix_seconds: started,
        wall_clock_seconds: timer.total(),
        stages: std::mem::take(&mut timer.stages),
        outputs: digests,
        exit_status: status,
    };
    if let Err(e) = write_manifest(dir, &manifest) {
        eprintln!("engine error: {e:#}");
        return ExitCode::from(ENGINE_ERROR);
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    for (name, digest) in &manifest.outputs {
        println!("wrote {} ({digest})", dir.join(name).display());
    }
    ExitCode::from(status)
}
