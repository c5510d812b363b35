//! `npk`: phantom generation, curve featurization, model evaluation and soil
//! nutrient prediction.

mod args;
mod commands;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use settings::Settings;

fn main() -> ExitCode {
    // Usage errors exit with status 2 from inside clap.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::load(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::Gen(a) => commands::gen::run(&settings, a),
        Command::Featurize(a) => commands::featurize::run(&settings, a),
        Command::Train(a) => commands::train::run(&settings, a),
        Command::Eval(a) => commands::eval::run(&settings, a),
        Command::Predict(a) => commands::predict::run(&settings, a),
        Command::Convert(a) => commands::convert::run(&settings, a),
    }
}
