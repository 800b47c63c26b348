//! `fdi` — generate decoy technical documents and evaluate how convincing
//! they are.
//!
//! The pipeline masks the important spans of each document (leaving the
//! title and first sentence intact so a reader knows what the decoy claims
//! to be) and refills the blanks with plausible-but-wrong content sampled
//! from a scoring backend. Further subcommands assemble blinded review
//! packets and aggregate reviewer verdicts.
//!
//! Exit codes: 0 success, 1 configuration error, 2 finished with
//! per-document failures, 3 scoring backend unreachable.

mod commands;
mod config;
mod manifest;
mod report;
mod svg;

use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "fdi",
    version,
    about = "Generate and evaluate decoy technical documents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Score concept spans and report which ones are mask candidates.
    Extract(commands::extract::ExtractArgs),
    /// Sample masked examples for each document.
    Mask(commands::mask::MaskArgs),
    /// Emit randomly masked training pairs, one serialized pair per line.
    Traindata(commands::traindata::TraindataArgs),
    /// Mask documents and infill the blanks: the full decoy pipeline.
    Generate(commands::generate::GenerateArgs),
    /// Bundle originals and fakes into review packets plus an answer key.
    Quiz(commands::quiz::QuizArgs),
    /// Aggregate review sheets into the metrics report.
    Metrics(commands::metrics::MetricsArgs),
}

const EXIT_CONFIG: u8 = 1;
const EXIT_BACKEND_UNREACHABLE: u8 = 3;

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`fdi extract | head`) instead of
    // panicking mid-write; Rust ignores SIGPIPE by default.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors; everything else is a usage
            // problem and maps to the configuration-error exit code.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match &cli.command {
        Command::Extract(args) => commands::extract::run(args),
        Command::Mask(args) => commands::mask::run(args),
        Command::Traindata(args) => commands::traindata::run(args),
        Command::Generate(args) => commands::generate::run(args),
        Command::Quiz(args) => commands::quiz::run(args),
        Command::Metrics(args) => commands::metrics::run(args),
    };

    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", render_chain(&err));
            ExitCode::from(classify(&err))
        }
    }
}

/// Joins the error chain with ": ", skipping causes whose text the previous
/// link already embeds (common when an error both displays and sources its
/// cause).
fn render_chain(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

/// Distinguishes "the scoring service is down" from ordinary configuration
/// and input errors by walking the error chain.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<fdi_core::Error>() {
            if commands::is_backend_unreachable(core) {
                return EXIT_BACKEND_UNREACHABLE;
            }
        }
    }
    EXIT_CONFIG
}
