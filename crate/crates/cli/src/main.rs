//! `mrie`: extraction, adjudication and evaluation of free-text medical
//! reports from the command line.
//!
//! Exit codes: 0 success, 1 partial or data failure, 2 configuration error.
//! The API key for remote endpoints is read from `EXTRACTOR_API_KEY`.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::ConfigError;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mrie", version, about = "Structured extraction from medical reports")]
struct Cli {
    /// Raise log verbosity (-v debug, -vv trace). Report text and extracted
    /// values are only ever logged at trace level.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rebuild plaintext reports from OCR element JSON files.
    Layout(commands::layout::LayoutArgs),
    /// Replace UK postcodes in plaintext reports with a placeholder.
    Redact(commands::layout::RedactArgs),
    /// List the models an endpoint serves.
    Models(commands::extract::ModelsArgs),
    /// Extract schema features from every report in a directory.
    Extract(commands::extract::ExtractArgs),
    /// Run the deterministic mock chat-completions server.
    MockLlm(commands::mock::MockArgs),
    /// Compare two annotation sets and build a blinded conflict queue.
    Diff(commands::annotate::DiffArgs),
    /// Serve the adjudication API until every conflict is resolved.
    Adjudicate(commands::adjudicate::AdjudicateArgs),
    /// Assemble the gold standard from agreements and resolutions.
    Gold(commands::annotate::GoldArgs),
    /// Score annotators against the gold standard and compare them.
    Evaluate(commands::evaluate::EvaluateArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::INFO,
        1 => tracing::Level::DEBUG,
        _ => tracing::Level::TRACE,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start async runtime: {e}");
            return ExitCode::from(2);
        }
    };
    let result = runtime.block_on(async {
        match cli.command {
            Command::Layout(a) => commands::layout::run_layout(a),
            Command::Redact(a) => commands::layout::run_redact(a),
            Command::Models(a) => commands::extract::run_models(a).await,
            Command::Extract(a) => commands::extract::run_extract(a).await,
            Command::MockLlm(a) => commands::mock::run(a).await,
            Command::Diff(a) => commands::annotate::run_diff(a),
            Command::Adjudicate(a) => commands::adjudicate::run(a).await,
            Command::Gold(a) => commands::annotate::run_gold(a),
            Command::Evaluate(a) => commands::evaluate::run(a),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
