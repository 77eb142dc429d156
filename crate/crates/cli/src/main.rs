mod args;
mod commands;
mod exit;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use tracing::Level;

use args::{Cli, Command};
use exit::Status;

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        Level::ERROR
    } else {
        match cli.verbose {
            0 => Level::WARN,
            1 => Level::INFO,
            2 => Level::DEBUG,
            _ => Level::TRACE,
        }
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_target(false)
        .without_time()
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() && !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return if e.use_stderr() { Status::Usage } else { Status::Success }.into();
        }
    };
    init_logging(&cli);

    let ctx = match commands::Context::new(&cli) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.status.into();
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(&ctx, a),
        Command::Augment(a) => commands::augment(&ctx, a),
        Command::Extract(a) => commands::extract(&ctx, a),
        Command::Characterize(a) => commands::characterize(&ctx, a),
        Command::ValidateFix(a) => commands::validate_fix(&ctx, a),
        Command::Doctor => commands::doctor(&ctx),
    };
    match result {
        Ok(status) => status.into(),
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.status.into()
        }
    }
}
