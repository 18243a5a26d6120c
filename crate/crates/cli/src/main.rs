mod args;
mod commands;
mod exit;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use exit::Failure;
use settings::Settings;

fn run(cli: Cli) -> Result<(), Failure> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let threads = settings.pick(cli.threads, "threads", 0)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage(format!("--threads: {e}")))?;
    }
    let ctx = Context {
        seed: settings.seed(cli.seed)?,
        seed_flag: cli.seed,
        settings,
    };
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Build(a) => commands::build(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Cv(a) => commands::cv(&ctx, a),
        Command::Tune(a) => commands::tune(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Predict(a) => commands::predict(a),
        Command::Ablate(a) => commands::ablate(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
