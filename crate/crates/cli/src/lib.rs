//! Command-line front end: argument types, subcommands and exit codes.

pub mod args;
pub mod commands;
pub mod error;
pub mod geojson;

use args::{Cli, Command};
use error::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Solve(a) => commands::solve_command(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Stats(a) => commands::stats(a),
        Command::ExportGeojson(a) => commands::export_geojson(a),
    }
}
