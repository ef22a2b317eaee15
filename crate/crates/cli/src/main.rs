//! `trihom`: command-line front end for the confinement workbench.

mod enumerate;
mod simulate;
mod solve;
mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::process::ExitCode;

/// Every JSON document names its schema as `trihom/<command>/v<SCHEMA_VERSION>`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Global settings shared by every subcommand. Each has a `TRIHOM_` environment override.
#[derive(Debug, Parser)]
#[command(
    name = "trihom",
    version,
    about = "Singularity confinement workbench for asymmetric trihomographic maps"
)]
pub struct RunConfig {
    /// Base seed for every random choice.
    #[arg(long, global = true, env = "TRIHOM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Starting ε-series order for simulations (doubled on demand up to 24).
    #[arg(long, global = true, env = "TRIHOM_EPS_ORDER", default_value_t = 12,
          value_parser = clap::value_parser!(i64).range(1..=24))]
    pub eps_order: i64,
    /// Largest period tried by the solver.
    #[arg(long, global = true, env = "TRIHOM_PERIOD_CEILING", default_value_t = 2520,
          value_parser = clap::value_parser!(u64).range(1..=5040))]
    pub period_ceiling: u64,
    #[arg(long, global = true, env = "TRIHOM_FORMAT", value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List step quartets, multisets or patterns with their feasibility verdicts.
    Enumerate(enumerate::EnumerateArgs),
    /// Generate and solve the constraint system of a pattern.
    Solve(solve::SolveArgs),
    /// Check the bundled catalog of parametrizations.
    VerifyCatalog(verify::VerifyArgs),
    /// Follow a singularity through the map and report where it exits.
    Simulate(simulate::SimulateArgs),
}

/// What a command produced: a document, its text rendering and an exit code.
pub struct Output {
    pub schema: &'static str,
    pub json: serde_json::Value,
    pub text: String,
    pub code: u8,
}

impl Output {
    pub fn new<T: Serialize>(schema: &'static str, doc: &T, text: String, code: u8) -> Output {
        let json = serde_json::to_value(doc).expect("documents serialize");
        Output {
            schema,
            json,
            text,
            code,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input on the command line: exit code 2.
    Usage(String),
    /// The computation itself failed: exit code 1.
    Runtime(String),
}

impl From<trihom_core::Error> for CliError {
    fn from(e: trihom_core::Error) -> Self {
        match e {
            trihom_core::Error::Parse(_)
            | trihom_core::Error::UnknownEntry(_)
            | trihom_core::Error::ParityViolation(_) => CliError::Usage(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

fn render(cfg: &RunConfig, out: &Output) -> String {
    match cfg.format {
        Format::Text => out.text.clone(),
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert(
                "schema".into(),
                format!("trihom/{}/v{SCHEMA_VERSION}", out.schema).into(),
            );
            if let serde_json::Value::Object(m) = &out.json {
                doc.extend(m.clone());
            }
            let mut s =
                serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("json");
            s.push('\n');
            s
        }
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let result = match &cfg.command {
        Command::Enumerate(a) => enumerate::run(&cfg, a),
        Command::Solve(a) => solve::run(&cfg, a),
        Command::VerifyCatalog(a) => verify::run(&cfg, a),
        Command::Simulate(a) => simulate::run(&cfg, a),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(render(&cfg, &out).as_bytes());
            ExitCode::from(out.code)
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
