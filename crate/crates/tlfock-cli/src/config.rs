//! Strict JSON configuration: the coefficient matrix, truncation and
//! tolerance knobs, and the suite selection.

use serde::Deserialize;
use tlfock_core::numerics::{cmat_from_rows, C64, CMat};

/// Version tag carried by both configs and reports.
pub const SCHEMA_VERSION: &str = "1";

/// The verification suites, in dependency order (the derived `Ord`
/// follows declaration order, so sorting a selection schedules it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Validate,
    Dims,
    Relations,
    Commutators,
    Wtilde,
    Index,
    Kms,
    Fredholm,
    Kgroups,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Validate,
        Suite::Dims,
        Suite::Relations,
        Suite::Commutators,
        Suite::Wtilde,
        Suite::Index,
        Suite::Kms,
        Suite::Fredholm,
        Suite::Kgroups,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Validate => "validate",
            Suite::Dims => "dims",
            Suite::Relations => "relations",
            Suite::Commutators => "commutators",
            Suite::Wtilde => "wtilde",
            Suite::Index => "index",
            Suite::Kms => "kms",
            Suite::Fredholm => "fredholm",
            Suite::Kgroups => "kgroups",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "A")]
    a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "N")]
    n: Option<usize>,
    budget: Option<u64>,
    tolerance: Option<f64>,
    suites: Option<Vec<String>>,
}

/// A validated run request. `suites_explicit` distinguishes a selection
/// written in the config (or on the command line) from the defaults:
/// defaulted suites whose mathematical preconditions fail are skipped
/// with a reason, explicitly requested ones turn into input errors.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub a: CMat,
    pub m: usize,
    pub n: usize,
    pub budget: u64,
    pub tolerance: f64,
    pub suites: Vec<Suite>,
    pub suites_explicit: bool,
}

/// Every suite that is defined for the generator count: the scalar
/// index specialization exists only for the two-generator family.
pub fn default_suites(m: usize) -> Vec<Suite> {
    Suite::ALL
        .into_iter()
        .filter(|&s| s != Suite::Index || m == 2)
        .collect()
}

fn default_truncation(m: usize) -> usize {
    match m {
        2 => 12,
        3 => 6,
        _ => 5,
    }
}

/// Parses and validates a config document. All failures are input
/// errors; JSON syntax errors carry serde_json's line/column.
pub fn parse_config(text: &str) -> Result<RunSpec, String> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))?;

    let m = raw.a.len();
    if m < 2 {
        return Err(format!("shape error: A must be at least 2x2, got {m} rows"));
    }
    if let Some(row) = raw.a.iter().find(|row| row.len() != m) {
        return Err(format!(
            "shape error: A must be square, got a row of length {} in a {m}-row matrix",
            row.len()
        ));
    }
    let entries: Vec<C64> = raw
        .a
        .iter()
        .flatten()
        .map(|&[re, im]| C64::new(re, im))
        .collect();
    let a = cmat_from_rows(m, m, &entries).map_err(|e| e.to_string())?;

    let n = raw.n.unwrap_or_else(|| default_truncation(m));
    if n < 3 {
        return Err(format!("truncation N must be at least 3, got {n}"));
    }
    let budget = raw.budget.unwrap_or(8_000_000);
    let tolerance = raw.tolerance.unwrap_or(1e-8);
    if !(tolerance > 0.0) {
        return Err(format!("tolerance must be positive, got {tolerance}"));
    }

    let (suites, suites_explicit) = match raw.suites {
        None => (default_suites(m), false),
        Some(names) => {
            if names.is_empty() {
                return Err("suites must not be empty when given".into());
            }
            let mut suites = Vec::new();
            for name in &names {
                match Suite::from_name(name) {
                    Some(s) => suites.push(s),
                    None => {
                        return Err(format!(
                            "unknown suite {name:?}; expected one of {}",
                            Suite::ALL.map(Suite::name).join(", ")
                        ))
                    }
                }
            }
            suites.sort();
            suites.dedup();
            (suites, true)
        }
    };

    Ok(RunSpec {
        a,
        m,
        n,
        budget,
        tolerance,
        suites,
        suites_explicit,
    })
}
