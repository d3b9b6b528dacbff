//! `emopipe`: runs the emotion pipeline stage by stage from a TOML config.

mod commands;
mod config;
mod meta;
mod specs;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use emopipe::emoclass::build_annotation_prompt;

use config::{invalid, Overrides, RunConfig, ValidationError};

#[derive(Parser, Debug)]
#[command(
    name = "emopipe",
    version,
    about = "Emotion extraction from financial social-media text and panel regressions"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Abort on the first malformed input record instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,
    /// Overrides the output directory in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean, sessionize and restrict the message corpus.
    Preprocess,
    /// Fit the emotion classifier on the labeled set.
    Train,
    /// Cross-validate the classifier and write the metrics report.
    Evaluate,
    /// Score the cleaned corpus with the trained model.
    Predict,
    /// Aggregate predictions to firm-session emotion shares.
    Aggregate,
    /// Build the firm-day panel of returns and emotion columns.
    Panel,
    /// Fit the regressions in the spec file.
    Regress,
    /// Daily emotion shares with trailing-window z-scores.
    Eventstudy,
    /// Every stage in order: preprocess, train, evaluate, predict, aggregate, panel, regress, eventstudy.
    Run,
    /// Print the annotation prompt for messages given as arguments or in a file.
    Prompt {
        /// Message texts.
        text: Vec<String>,
        /// File with one message per line.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        /// Emit one chat-completion request body per line.
        #[arg(long)]
        json: bool,
    },
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("EMOPIPE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| invalid(format!("EMOPIPE_THREADS: expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn prompt(text: Vec<String>, input: Option<PathBuf>, json: bool) -> anyhow::Result<()> {
    let mut messages = text;
    if let Some(p) = input {
        let body = std::fs::read_to_string(&p).map_err(|e| invalid(format!("cannot read {}: {e}", p.display())))?;
        messages.extend(body.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
    }
    if messages.is_empty() {
        return Err(invalid("prompt: give message text or --input"));
    }
    let mut out = std::io::stdout().lock();
    for (i, m) in messages.iter().enumerate() {
        let p = build_annotation_prompt(m);
        if json {
            writeln!(out, "{}", p.to_request_json())?;
        } else {
            if i > 0 {
                writeln!(out)?;
            }
            writeln!(out, "{}", p.render())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    if let Command::Prompt { text, input, json } = cli.command {
        return prompt(text, input, json);
    }
    let path = cli.config.ok_or_else(|| invalid("--config PATH is required"))?;
    let cfg = RunConfig::load(
        &path,
        &Overrides {
            seed: cli.seed,
            out: cli.out,
            strict: cli.strict,
        },
    )?;
    match cli.command {
        Command::Preprocess => commands::preprocess(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Predict => commands::predict(&cfg),
        Command::Aggregate => commands::aggregate(&cfg),
        Command::Panel => commands::panel(&cfg),
        Command::Regress => commands::regress(&cfg),
        Command::Eventstudy => commands::eventstudy(&cfg),
        Command::Run => commands::run_all(&cfg),
        Command::Prompt { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<ValidationError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
