//! `needminer`: command-line front end for corpus preparation, model
//! training and evaluation, quantification and the service.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors. Errors
//! go to stderr as one JSON line.

mod cli;
mod commands;
mod inputs;

use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use cli::Cli;

/// A bad flag combination or value noticed after parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": message, "kind": kind }));
    ExitCode::from(if kind == "usage" { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string();
            return fail("usage", &first);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return fail("usage", "--jobs must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail("runtime", &e.to_string());
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => fail("usage", &format!("{e:#}")),
        Err(e) => fail("runtime", &format!("{e:#}")),
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let out = commands::run(&cli.command, cli.seed)?;
    let envelope = json!({
        "command": serde_json::to_value(&cli.command)?["command"],
        "seed": cli.seed,
        "args": cli,
        "result": out.result,
    });
    if let Some(path) = &cli.out {
        let text = serde_json::to_string_pretty(&envelope)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&envelope)?);
    } else {
        println!("{}", out.text);
    }
    Ok(())
}
