//! `hairstyle`: one subcommand per pipeline stage, composed through files.
//!
//! Exit status: 0 success, 1 inputs rejected, 2 unreadable inputs,
//! unwritable outputs or bad usage.

mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{balance, data, model, service};

#[derive(Debug, Parser)]
#[command(name = "hairstyle", version, about = "Hairstyle taxonomy, balancing, training and fairness evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check annotations against the taxonomy and its consistency rules
    Validate(data::ValidateArgs),
    /// Attribute marginals of a style library, optionally weighted
    Marginals(data::MarginalsArgs),
    /// Fit per-style sampling weights to target marginals
    Balance(balance::BalanceArgs),
    /// Draw style ids from fitted weights
    Sample(balance::SampleArgs),
    /// Train the classification heads on precomputed features
    Train(model::TrainArgs),
    /// Run a checkpoint on features and write the fairness report
    Eval(model::EvalArgs),
    /// Fairness report from existing predictions
    Report(model::ReportArgs),
    /// Run the annotation service
    Serve(service::ServeArgs),
    /// Export the annotation store as a style library
    Export(service::ExportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => data::validate(a),
        Command::Marginals(a) => data::marginals(a),
        Command::Balance(a) => balance::balance(a),
        Command::Sample(a) => balance::sample(a),
        Command::Train(a) => model::train(a),
        Command::Eval(a) => model::eval(a),
        Command::Report(a) => model::report(a),
        Command::Serve(a) => service::serve(a),
        Command::Export(a) => service::export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
