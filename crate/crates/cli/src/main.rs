mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use figura_core::config::Config;
use tracing_subscriber::EnvFilter;

use args::{Cli, Command};
use error::CliError;

fn configure(cli: &Cli) -> Result<Config, CliError> {
    let mut overrides = cli.overrides.clone();
    let flags = match &cli.command {
        Command::Lexicon(a) => a.data.overrides(),
        Command::Connect(a) => a.data.overrides(),
        Command::Generate(a) => a.data.overrides(),
        Command::Serve(a) => {
            let mut o = a.data.overrides();
            if let Some(bind) = &a.bind {
                o.push(("service.bind".into(), bind.clone()));
            }
            if let Some(p) = &a.inventory {
                o.push(("data.inventory".into(), p.display().to_string()));
            }
            if let Some(p) = &a.event_log {
                o.push(("service.event_log".into(), p.display().to_string()));
            }
            o
        }
        _ => Vec::new(),
    };
    overrides.extend(flags);
    Ok(Config::load(cli.config.as_deref(), std::env::vars(), &overrides)?)
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let config = configure(cli)?;
    match &cli.command {
        Command::Freq(a) => commands::freq(&config, a),
        Command::Lexicon(a) => commands::lexicon(&config, a),
        Command::Connect(a) => commands::connect(&config, a),
        Command::Generate(a) => commands::generate(&config, a),
        Command::ExportAnnotations(a) => commands::export_annotations(a),
        Command::Replay(a) => commands::replay(a),
        Command::Serve(a) => commands::serve(&config, a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
