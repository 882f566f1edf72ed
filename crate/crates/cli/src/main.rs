mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;

fn run(cli: &Cli) -> anyhow::Result<()> {
    let ctx = Context {
        format: cli.format,
        quiet: cli.quiet,
        seed: cli.seed,
        scheme: cli.scheme,
    };
    match &cli.command {
        Command::Augment(a) => commands::augment(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::DiffErrors(a) => commands::diff_errors_cmd(&ctx, a),
        Command::Window(a) => commands::window(&ctx, a),
        Command::Flag(a) => commands::flag(&ctx, a),
        Command::Apply(a) => commands::apply(&ctx, a),
        Command::Review(a) => commands::review(&ctx, a),
        Command::Train(a) => commands::train_cmd(&ctx, a),
        Command::Tag(a) => commands::tag_cmd(&ctx, a),
        Command::Stats(s) => commands::stats(&ctx, s),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
