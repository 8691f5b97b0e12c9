//! `tlfock` — verification harness for Temperley-Lieb subproduct
//! systems. Reads a JSON config, runs the selected suites and emits a
//! JSON report (stdout, optionally a file) plus an optional CSV decay
//! table. Exit code 0 when every selected suite passes, 1 when a
//! mathematical check fails, 2 on input errors.

mod config;
mod report;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{parse_config, Suite};
use report::input_error_json;

#[derive(Parser)]
#[command(
    name = "tlfock",
    version,
    about = "Verification suites for Temperley-Lieb subproduct systems"
)]
struct Cli {
    /// A single suite name (validate, dims, relations, commutators,
    /// wtilde, index, kms, fredholm, kgroups) or "report" for the
    /// config's selection.
    command: String,

    /// JSON config with the coefficient matrix and knobs.
    #[arg(short = 'c', long = "config")]
    config: PathBuf,

    /// Also write the JSON report to this path.
    #[arg(long)]
    json: Option<PathBuf>,

    /// Write the decay table (commutators, else Fredholm) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Generator count override; only meaningful for kgroups.
    #[arg(short = 'm')]
    m: Option<usize>,
}

fn fail_input(message: &str) -> ExitCode {
    println!("{}", input_error_json(message));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail_input(&format!("cannot read {}: {e}", cli.config.display())),
    };
    let mut spec = match parse_config(&text) {
        Ok(s) => s,
        Err(e) => return fail_input(&e),
    };

    match cli.command.as_str() {
        "report" => {}
        name => match Suite::from_name(name) {
            Some(s) => {
                spec.suites = vec![s];
                spec.suites_explicit = true;
            }
            None => {
                return fail_input(&format!(
                    "unknown command {name:?}; expected \"report\" or a suite name"
                ))
            }
        },
    }
    if cli.m.is_some() && !spec.suites.contains(&Suite::Kgroups) {
        return fail_input("-m only applies to the kgroups suite");
    }

    let outcome = runner::run(&spec, cli.m);
    let rendered =
        serde_json::to_string_pretty(&outcome.report).expect("reports hold plain JSON values");
    println!("{rendered}");

    if let Some(path) = &cli.json {
        if let Err(e) = std::fs::write(path, format!("{rendered}\n")) {
            return fail_input(&format!("cannot write {}: {e}", path.display()));
        }
    }
    if let Some(path) = &cli.csv {
        // Header-only when no selected suite produced a decay table.
        let body = outcome
            .csv
            .unwrap_or_else(|| "n,value,q_power,ratio\n".into());
        if let Err(e) = std::fs::write(path, body) {
            return fail_input(&format!("cannot write {}: {e}", path.display()));
        }
    }

    ExitCode::from(outcome.report.exit_code() as u8)
}
