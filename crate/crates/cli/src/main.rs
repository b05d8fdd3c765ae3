mod args;
mod commands;
mod jobs;

use std::process::ExitCode;

use clap::Parser;
use hazekit::config::PipelineConfig;
use hazekit::Error;

use args::Cli;

/// Flag > config file > default. Bad keys or values are usage errors.
fn resolve_config(cli: &Cli) -> Result<PipelineConfig, (u8, Error)> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path).map_err(|e| match e {
            Error::Io { .. } => (1, e),
            other => (2, other),
        })?,
        None => PipelineConfig::default(),
    };
    for (key, value) in cli.tunables.overrides() {
        cfg.set(key, &value).map_err(|e| (2, e))?;
    }
    cfg.validate().map_err(|e| (2, e))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // help and version exit 0, usage errors 2
        Err(e) => e.exit(),
    };
    let cfg = match resolve_config(&cli) {
        Ok(cfg) => cfg,
        Err((code, e)) => {
            eprintln!("hazekit: {e}");
            return ExitCode::from(code);
        }
    };
    if cli.print_config {
        print!("{}", cfg.to_config_string());
        return ExitCode::SUCCESS;
    }
    if cli.jobs == 0 {
        eprintln!("hazekit: --jobs must be >= 1");
        return ExitCode::from(2);
    }
    match commands::run(cli.command, &cfg, cli.jobs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hazekit: {e}");
            ExitCode::from(1)
        }
    }
}
