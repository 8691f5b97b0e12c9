//! Report assembly: one JSON document per run, plus the plot-ready CSV
//! rendering of a decay table.

use serde::Serialize;
use serde_json::Value;

use crate::config::SCHEMA_VERSION;

/// Outcome of one suite. `detail` carries the suite's residuals,
/// tables and constants; on an error it holds the structured message.
#[derive(Debug, Serialize)]
pub struct SuiteEntry {
    pub suite: &'static str,
    /// "pass", "fail", "skipped" or "error".
    pub status: &'static str,
    pub wall_ms: u128,
    pub detail: Value,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub m: usize,
    /// Deformation parameter, present once validation succeeded.
    pub q: Option<f64>,
    /// Requested truncation and the achieved fully-embedded range.
    pub n: usize,
    pub n_full: Option<usize>,
    pub budget: u64,
    pub tolerance: f64,
    pub threads: usize,
    pub suites: Vec<SuiteEntry>,
    /// "pass", "fail" or "error"; skipped suites do not fail a run.
    pub overall: &'static str,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.overall {
            "pass" => 0,
            "fail" => 1,
            _ => 2,
        }
    }
}

pub fn overall_status(entries: &[SuiteEntry]) -> &'static str {
    if entries.iter().any(|e| e.status == "error") {
        "error"
    } else if entries.iter().any(|e| e.status == "fail") {
        "fail"
    } else {
        "pass"
    }
}

/// Renders a decay table as CSV: value at level n next to qⁿ and the
/// witnessed ratio value/qⁿ.
pub fn decay_csv(rows: &[(usize, f64)], q: f64) -> String {
    let mut out = String::from("n,value,q_power,ratio\n");
    for &(n, value) in rows {
        let p = q.powi(n as i32);
        out.push_str(&format!("{n},{value:e},{p:e},{:e}\n", value / p));
    }
    out
}

/// The error document emitted when a run cannot even start (unreadable
/// or invalid config, bad command line).
pub fn input_error_json(message: &str) -> String {
    serde_json::to_string_pretty(&serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "overall": "error",
        "error": message,
    }))
    .expect("static document serializes")
}
